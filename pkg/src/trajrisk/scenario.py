"""Scenario files, assessment drivers, and risk reports.

A scenario is a UTF-8 JSON document: a planned ego trajectory, the collision
ellipsoid, and one prediction per surrounding agent, either as per-step
position mixtures or as control mixtures driving a unicycle rollout.
Loading validates every invariant with messages that name the offending
agent/step path.  Reports serialize to JSON (nested) or CSV (one row per
agent x step x method).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .distributions import (
    Gaussian2D,
    Gaussian2DMixture,
    ScalarComponent,
    ScalarMixture,
)
from .engine import (
    BOUND_METHODS,
    METHODS,
    MarginalRisk,
    TrajectoryRisk,
    marginal_risk,
    multi_agent_bound,
    trajectory_risk,
)
from .errors import ValidationError
from .frames import EgoPose, Ellipsoid
from .mc import McEstimate, mc_control_risk, mc_position_risk
from .treering import dubins_position_tables

__all__ = [
    "PositionAgent",
    "ControlAgent",
    "Scenario",
    "RiskReport",
    "load_scenario",
    "write_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "run_assess",
    "run_oracle",
]

_WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PositionAgent:
    """Per-step position mixtures for one agent."""

    steps: Tuple[Gaussian2DMixture, ...]
    mode_persistence: bool = False

    form = "gmm_position"


@dataclass(frozen=True)
class ControlAgent:
    """Initial state plus per-step (speed, heading) control mixtures."""

    initial_state: Tuple[float, float, float, float]
    steps: Tuple[Tuple[ScalarMixture, ScalarMixture], ...]

    form = "gmm_control"


Agent = Union[PositionAgent, ControlAgent]


@dataclass(frozen=True)
class Scenario:
    ego_trajectory: Tuple[EgoPose, ...]
    ellipsoid: Ellipsoid
    agents: Tuple[Agent, ...]

    def __post_init__(self):
        if not self.ego_trajectory:
            raise ValidationError("ego_trajectory must have at least one pose")
        horizon = len(self.ego_trajectory)
        for i, agent in enumerate(self.agents):
            if len(agent.steps) != horizon:
                raise ValidationError(
                    f"agents[{i}]: horizon {len(agent.steps)} does not match "
                    f"ego trajectory length {horizon}"
                )

    @property
    def horizon(self) -> int:
        return len(self.ego_trajectory)


# ---------------------------------------------------------------------------
# parsing


def _expect(obj: dict, key: str, where: str):
    if key not in obj:
        raise ValidationError(f"{where}: missing required key {key!r}")
    return obj[key]


def _weights(modes: Sequence[dict], where: str) -> List[float]:
    w = [float(_expect(m, "weight", f"{where}[{k}]")) for k, m in enumerate(modes)]
    if any(x < 0 for x in w):
        raise ValidationError(f"{where}: negative mode weight")
    s = math.fsum(w)
    if abs(s - 1.0) > _WEIGHT_SUM_TOL:
        raise ValidationError(f"{where}: mode weights sum to {s!r}, expected 1")
    return [x / s for x in w]


def _position_agent(obj: dict, where: str) -> PositionAgent:
    steps_raw = _expect(obj, "steps", where)
    if not steps_raw:
        raise ValidationError(f"{where}: empty step list")
    steps = []
    for t, step in enumerate(steps_raw):
        here = f"{where}.steps[{t}]"
        modes = _expect(step, "modes", here)
        if not modes:
            raise ValidationError(f"{here}: empty mode list")
        weights = _weights(modes, f"{here}.modes")
        comps = []
        for k, mode in enumerate(modes):
            mwhere = f"{here}.modes[{k}]"
            try:
                comps.append(
                    Gaussian2D(_expect(mode, "mean", mwhere), _expect(mode, "cov", mwhere))
                )
            except ValidationError as e:
                raise ValidationError(f"{mwhere}: {e}") from None
        steps.append(Gaussian2DMixture(comps, weights))
    return PositionAgent(
        steps=tuple(steps),
        mode_persistence=bool(obj.get("mode_persistence", False)),
    )


def _scalar_mixture(modes: Sequence[dict], where: str) -> ScalarMixture:
    if not modes:
        raise ValidationError(f"{where}: empty mode list")
    weights = _weights(modes, where)
    comps = []
    for k, mode in enumerate(modes):
        var = float(_expect(mode, "var", f"{where}[{k}]"))
        if var < 0:
            raise ValidationError(f"{where}[{k}]: negative variance {var}")
        comps.append(ScalarComponent(float(_expect(mode, "mean", f"{where}[{k}]")), var))
    return ScalarMixture(tuple(comps), tuple(weights))


def _control_agent(obj: dict, where: str) -> ControlAgent:
    init = _expect(obj, "initial_state", where)
    try:
        state = tuple(
            float(_expect(init, k, f"{where}.initial_state")) for k in ("x", "y", "v", "theta")
        )
    except (TypeError, ValueError):
        raise ValidationError(f"{where}.initial_state: fields must be numbers") from None
    if not all(math.isfinite(s) for s in state):
        raise ValidationError(f"{where}.initial_state: fields must be finite")
    steps_raw = _expect(obj, "steps", where)
    if not steps_raw:
        raise ValidationError(f"{where}: empty step list")
    steps = []
    for t, step in enumerate(steps_raw):
        here = f"{where}.steps[{t}]"
        steps.append(
            (
                _scalar_mixture(_expect(step, "w_v_modes", here), f"{here}.w_v_modes"),
                _scalar_mixture(_expect(step, "w_theta_modes", here), f"{here}.w_theta_modes"),
            )
        )
    return ControlAgent(initial_state=state, steps=tuple(steps))


def scenario_from_dict(obj: dict) -> Scenario:
    """Build and validate a Scenario from parsed JSON."""
    ego_raw = _expect(obj, "ego_trajectory", "scenario")
    poses = []
    for t, pose in enumerate(ego_raw):
        where = f"ego_trajectory[{t}]"
        try:
            poses.append(
                EgoPose(
                    float(_expect(pose, "x", where)),
                    float(_expect(pose, "y", where)),
                    float(_expect(pose, "theta", where)),
                )
            )
        except ValidationError as e:
            raise ValidationError(f"{where}: {e}") from None
    ell_raw = _expect(obj, "ellipsoid", "scenario")
    try:
        ell = Ellipsoid(np.asarray(_expect(ell_raw, "q", "ellipsoid"), dtype=float))
    except ValidationError as e:
        raise ValidationError(f"ellipsoid.q: {e}") from None
    agents: List[Agent] = []
    for i, a in enumerate(obj.get("agents", [])):
        where = f"agents[{i}]"
        form = _expect(a, "form", where)
        if form == "gmm_position":
            agents.append(_position_agent(a, where))
        elif form == "gmm_control":
            agents.append(_control_agent(a, where))
        else:
            raise ValidationError(f"{where}: unknown form {form!r}")
    return Scenario(tuple(poses), ell, tuple(agents))


def scenario_to_dict(sc: Scenario) -> dict:
    agents = []
    for agent in sc.agents:
        if isinstance(agent, PositionAgent):
            steps = []
            for mix in agent.steps:
                steps.append(
                    {
                        "modes": [
                            {
                                "weight": w,
                                "mean": list(c.mean),
                                "cov": [list(row) for row in c.cov],
                            }
                            for w, c in zip(mix.weights, mix.components)
                        ]
                    }
                )
            agents.append(
                {
                    "form": "gmm_position",
                    "mode_persistence": agent.mode_persistence,
                    "steps": steps,
                }
            )
        else:
            x, y, v, theta = agent.initial_state
            steps = []
            for w_v, w_th in agent.steps:
                steps.append(
                    {
                        "w_v_modes": [
                            {"weight": w, "mean": c.mean, "var": c.variance}
                            for w, c in zip(w_v.weights, w_v.components)
                        ],
                        "w_theta_modes": [
                            {"weight": w, "mean": c.mean, "var": c.variance}
                            for w, c in zip(w_th.weights, w_th.components)
                        ],
                    }
                )
            agents.append(
                {
                    "form": "gmm_control",
                    "initial_state": {"x": x, "y": y, "v": v, "theta": theta},
                    "steps": steps,
                }
            )
    return {
        "ego_trajectory": [
            {"x": p.x, "y": p.y, "theta": p.theta} for p in sc.ego_trajectory
        ],
        "ellipsoid": {"q": [list(row) for row in sc.ellipsoid.q]},
        "agents": agents,
    }


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    try:
        return scenario_from_dict(obj)
    except ValidationError as e:
        raise ValidationError(f"{path}: {e}") from None


def write_scenario(sc: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ReportRow:
    agent: int
    t: Union[int, str]
    method: str
    value: float
    is_upper_bound: bool
    std_error: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValidationError(f"report value {self.value} outside [0, 1]")


@dataclass
class RiskReport:
    horizon: int
    methods: Tuple[str, ...]
    rows: List[ReportRow]
    totals: List[ReportRow]
    union_bound: Dict[str, float]
    timings_ms: Dict[str, float]
    mc_samples: Optional[int] = None
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        def row(r: ReportRow) -> dict:
            d = {
                "agent": r.agent,
                "t": r.t,
                "method": r.method,
                "value": r.value,
                "is_upper_bound": r.is_upper_bound,
            }
            if r.std_error is not None:
                d["std_error"] = r.std_error
            return d

        out = {
            "horizon": self.horizon,
            "methods": list(self.methods),
            "per_step": [row(r) for r in self.rows],
            "totals": [row(r) for r in self.totals],
            "multi_agent_bound": dict(self.union_bound),
            "timings_ms": {k: round(v, 3) for k, v in self.timings_ms.items()},
        }
        if self.mc_samples is not None:
            out["mc_samples"] = self.mc_samples
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["agent", "t", "method", "value", "is_upper_bound", "std_error"])
        for r in list(self.rows) + list(self.totals):
            writer.writerow(
                [
                    r.agent,
                    r.t,
                    r.method,
                    repr(r.value),
                    r.is_upper_bound,
                    "" if r.std_error is None else repr(r.std_error),
                ]
            )
        return buf.getvalue()

    def write(self, path: str, format: str = "json") -> None:
        text = self.to_json() if format == "json" else self.to_csv()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# assessment drivers

# Moment order each bound method needs from propagated control-form tables.
_TABLE_ORDER = {"chebyshev-halfspace": 2, "chebyshev-quad": 4, "sos-d2": 4}


def _required_order(methods: Sequence[str]) -> int:
    order = 2
    for m in methods:
        if m in ("imhof", "ltz"):
            raise ValidationError(
                f"method {m!r} needs Gaussian position predictions, "
                "not a control-form agent"
            )
        if m in ("sos-d4", "sos-d6"):
            raise ValidationError(
                f"method {m!r} needs position moments of order {2 * int(m[-1])}; "
                "control-form propagation provides orders 2 and 4 only"
            )
        if m in _TABLE_ORDER:
            order = max(order, _TABLE_ORDER[m])
    return order


def _mc_agent_rows(
    agent: Agent,
    agent_ix: int,
    sc: Scenario,
    mc_samples: int,
    seed: int,
) -> Tuple[List[ReportRow], ReportRow]:
    agent_seed = seed * 7919 + agent_ix
    if isinstance(agent, PositionAgent):
        per_step, traj = mc_position_risk(
            agent.steps,
            sc.ego_trajectory,
            sc.ellipsoid,
            mc_samples,
            agent_seed,
            mode_persistence=agent.mode_persistence,
        )
    else:
        per_step, traj = mc_control_risk(
            agent.steps,
            agent.initial_state,
            sc.ego_trajectory,
            sc.ellipsoid,
            mc_samples,
            agent_seed,
        )
    rows = [
        ReportRow(agent_ix, t + 1, "mc", est.probability, False, est.std_error)
        for t, est in enumerate(per_step)
    ]
    total = ReportRow(agent_ix, "total", "mc", traj.probability, False, traj.std_error)
    return rows, total


def _analytic_agent_rows(
    agent: Agent,
    agent_ix: int,
    sc: Scenario,
    method: str,
    tol: float,
    n_halfspaces: int,
) -> Tuple[List[ReportRow], ReportRow]:
    marginals: List[MarginalRisk] = []
    if isinstance(agent, PositionAgent):
        for t, (mix, pose) in enumerate(zip(agent.steps, sc.ego_trajectory)):
            marginals.append(
                marginal_risk(
                    mix, pose, sc.ellipsoid, method,
                    t=t + 1, tol=tol, n_halfspaces=n_halfspaces,
                )
            )
        traj = trajectory_risk(marginals, mode_persistence=agent.mode_persistence)
    else:
        order = _required_order([method])
        w_v_steps = [s[0] for s in agent.steps]
        w_th_steps = [s[1] for s in agent.steps]
        tables = dubins_position_tables(
            agent.initial_state, w_v_steps, w_th_steps, order=order
        )
        for t, (table, pose) in enumerate(zip(tables[1:], sc.ego_trajectory)):
            marginals.append(
                marginal_risk(
                    table, pose, sc.ellipsoid, method,
                    t=t + 1, tol=tol, n_halfspaces=n_halfspaces,
                )
            )
        traj = trajectory_risk(marginals)
    rows = [
        ReportRow(agent_ix, m.t, method, m.mixed, m.is_upper_bound)
        for m in marginals
    ]
    total = ReportRow(agent_ix, "total", method, traj.total, marginals[0].is_upper_bound)
    return rows, total


def run_assess(
    scenario: Scenario,
    methods: Sequence[str],
    mc_samples: int = 10**5,
    seed: int = 0,
    tol: float = 1e-8,
    n_halfspaces: int = 12,
) -> RiskReport:
    """Evaluate every requested method on every agent of a scenario.

    Deterministic for a fixed seed.  Timing per method is accumulated wall
    time across agents and steps.
    """
    if not methods:
        raise ValidationError("no methods requested")
    methods = list(dict.fromkeys(methods))
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValidationError(
            f"unknown methods {unknown}; choose from {sorted(METHODS)}"
        )
    rows: List[ReportRow] = []
    totals: List[ReportRow] = []
    union: Dict[str, float] = {}
    timings: Dict[str, float] = {}
    for method in methods:
        t0 = time.perf_counter()
        agent_trajs: List[float] = []
        for i, agent in enumerate(scenario.agents):
            if method == "mc":
                step_rows, total = _mc_agent_rows(agent, i, scenario, mc_samples, seed)
            else:
                step_rows, total = _analytic_agent_rows(
                    agent, i, scenario, method, tol, n_halfspaces
                )
            rows.extend(step_rows)
            totals.append(total)
            agent_trajs.append(total.value)
        union[method] = min(1.0, math.fsum(agent_trajs))
        timings[method] = (time.perf_counter() - t0) * 1e3
    return RiskReport(
        horizon=scenario.horizon,
        methods=tuple(methods),
        rows=rows,
        totals=totals,
        union_bound=union,
        timings_ms=timings,
        mc_samples=mc_samples if "mc" in methods else None,
        seed=seed if "mc" in methods else None,
    )


def run_oracle(scenario: Scenario, mc_samples: int = 10**6, seed: int = 0) -> RiskReport:
    """Monte Carlo only; the reference a bound run is judged against."""
    return run_assess(scenario, ["mc"], mc_samples=mc_samples, seed=seed)
