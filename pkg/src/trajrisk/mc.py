"""Monte Carlo reference estimators for scenario risk.

Ground truth for the analytic and bound pipelines.  Position-mixture agents
are sampled directly at every step; control-mixture agents are rolled out as
a particle cloud through the unicycle dynamics.  All randomness comes from
counter-based Philox streams keyed on (seed, step), so estimates are
reproducible for a fixed seed and independent of how the work would be
partitioned across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .distributions import Gaussian2DMixture, ScalarMixture
from .errors import ValidationError
from .frames import EgoPose, Ellipsoid, rotate_form

__all__ = ["McEstimate", "mc_position_risk", "mc_control_risk"]

_MIN_SAMPLES = 1000


@dataclass(frozen=True)
class McEstimate:
    """Bernoulli estimate with its binomial standard error."""

    probability: float
    std_error: float
    samples: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValidationError(
                f"estimated probability {self.probability} outside [0, 1]"
            )


def _estimate(hits: np.ndarray, seed: int) -> McEstimate:
    n = hits.size
    p = float(hits.mean())
    return McEstimate(p, math.sqrt(p * (1.0 - p) / n), n, seed)


def _stream(seed: int, step: int) -> np.random.Generator:
    """Independent substream for one timestep (step -1: setup draws)."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(step + 1))


def _pick(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Categorical sampling by inverse CDF; stable across library versions."""
    edges = np.cumsum(weights)
    return np.minimum(np.searchsorted(edges, u, side="right"), len(weights) - 1)


def _psd_root(cov: np.ndarray) -> np.ndarray:
    """B with B B^T = cov; falls back past Cholesky for degenerate modes."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _check_common(n_samples: int, seed: int, n_steps: int, n_poses: int) -> None:
    if n_samples < _MIN_SAMPLES:
        raise ValidationError(f"need at least {_MIN_SAMPLES} samples, got {n_samples}")
    if seed < 0:
        raise ValidationError("seed must be a nonnegative integer")
    if n_steps != n_poses:
        raise ValidationError(
            f"prediction horizon {n_steps} does not match ego trajectory {n_poses}"
        )


def mc_position_risk(
    gmm_steps: Sequence[Gaussian2DMixture],
    ego_traj: Sequence[EgoPose],
    q: Ellipsoid,
    n_samples: int,
    seed: int,
    mode_persistence: bool = False,
) -> Tuple[List[McEstimate], McEstimate]:
    """Sampled per-step collision risks plus the trajectory-level union.

    Each step draws fresh positions from that step's mixture; the
    trajectory estimate is the per-sample union of step memberships.  With
    mode_persistence the mode index is drawn once per sample (from the
    step-0 weights) and held fixed, matching the mode-persistent survival
    semantics; steps stay conditionally independent given the mode.
    """
    _check_common(n_samples, seed, len(gmm_steps), len(ego_traj))
    n = int(n_samples)

    persistent_modes = None
    if mode_persistence:
        counts = {len(step.components) for step in gmm_steps}
        if len(counts) != 1:
            raise ValidationError(
                "mode persistence needs the same mode count at every step"
            )
        w = np.asarray(gmm_steps[0].weights, dtype=float)
        persistent_modes = _pick(w, _stream(seed, -1).random(n))

    per_step: List[McEstimate] = []
    union = np.zeros(n, dtype=bool)
    for t, (mix, pose) in enumerate(zip(gmm_steps, ego_traj)):
        g = _stream(seed, t)
        means = np.stack([c.mean for c in mix.components])
        chols = np.stack([_psd_root(c.cov) for c in mix.components])
        if persistent_modes is None:
            modes = _pick(np.asarray(mix.weights, dtype=float), g.random(n))
        else:
            modes = persistent_modes
        z = g.standard_normal((n, 2))
        pos = means[modes] + np.einsum("nij,nj->ni", chols[modes], z)
        hits = rotate_form(q, pose.theta).contains(pos - pose.position)
        union |= hits
        per_step.append(_estimate(hits, seed))
    return per_step, _estimate(union, seed)


def mc_control_risk(
    control_steps: Sequence[Tuple[ScalarMixture, ScalarMixture]],
    init_state: Tuple[float, float, float, float],
    ego_traj: Sequence[EgoPose],
    q: Ellipsoid,
    n_samples: int,
    seed: int,
) -> Tuple[List[McEstimate], McEstimate]:
    """Particle rollout of a control-mixture agent with per-step membership.

    control_steps[t] holds the (speed, heading) noise mixtures driving the
    transition into step t+1; the post-transition position is tested against
    ego_traj[t].  Also returns the union estimate over the whole horizon,
    which for a rollout is a true joint-trajectory probability.
    """
    _check_common(n_samples, seed, len(control_steps), len(ego_traj))
    n = int(n_samples)
    x0, y0, v0, th0 = map(float, init_state)
    x = np.full(n, x0)
    y = np.full(n, y0)
    v = np.full(n, v0)
    th = np.full(n, th0)

    def draw(mix: ScalarMixture, g: np.random.Generator) -> np.ndarray:
        means = np.array([c.mean for c in mix.components])
        sds = np.sqrt([c.variance for c in mix.components])
        comp = _pick(np.asarray(mix.weights, dtype=float), g.random(n))
        return means[comp] + sds[comp] * g.standard_normal(n)

    per_step: List[McEstimate] = []
    union = np.zeros(n, dtype=bool)
    for t, ((w_v, w_th), pose) in enumerate(zip(control_steps, ego_traj)):
        g = _stream(seed, t)
        x = x + v * np.cos(th)
        y = y + v * np.sin(th)
        v = v + draw(w_v, g)
        th = th + draw(w_th, g)
        pos = np.column_stack([x, y])
        hits = rotate_form(q, pose.theta).contains(pos - pose.position)
        union |= hits
        per_step.append(_estimate(hits, seed))
    return per_step, _estimate(union, seed)
