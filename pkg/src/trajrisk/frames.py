"""Rigid-frame changes for collision geometry.

The collision region is an ellipsoid fixed to the ego vehicle.  Rather than
moving the region along the ego trajectory, agent position distributions are
expressed in the ego body frame at each step: raw moments are translated to
the ego position and the quadratic form is rotated by the ego heading.  A
point x in the global frame has body coordinates R(theta) (x - v), so the
membership test (R(theta)(x - v))^T Q (R(theta)(x - v)) <= 1 becomes
(x - v)^T Q* (x - v) <= 1 with Q* = R(theta)^T Q R(theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import MomentTable
from .errors import ValidationError

__all__ = [
    "Ellipsoid",
    "EgoPose",
    "rotation",
    "rotate_form",
    "translate_moments",
    "to_ego_frame",
]

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class Ellipsoid:
    """Collision region {x : x^T Q x <= 1} with Q symmetric positive definite."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape != (2, 2):
            raise ValidationError(f"Q must be 2x2, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValidationError("Q has non-finite entries")
        if abs(q[0, 1] - q[1, 0]) > _SYM_TOL * max(1.0, abs(q[0, 1]), abs(q[1, 0])):
            raise ValidationError("Q must be symmetric within 1e-12")
        q = 0.5 * (q + q.T)
        eigvals = np.linalg.eigvalsh(q)
        if eigvals.min() <= 0.0:
            raise ValidationError(
                f"Q must be positive definite (eigenvalues {eigvals})"
            )
        q.flags.writeable = False
        object.__setattr__(self, "q", q)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership test for an (n, 2) array of points."""
        pts = np.asarray(points, dtype=float)
        vals = np.einsum("...i,ij,...j->...", pts, self.q, pts)
        return vals <= 1.0


@dataclass(frozen=True)
class EgoPose:
    """Planned ego position and heading at one timestep."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        for name in ("x", "y", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"ego pose field {name} must be finite")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def rotation(theta: float) -> np.ndarray:
    """Counterclockwise rotation matrix R(theta)."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotate_form(ell: Ellipsoid, theta: float) -> Ellipsoid:
    """Quadratic form of the region seen from a frame rotated by theta."""
    r = rotation(theta)
    return Ellipsoid(r.T @ ell.q @ r)


def translate_moments(table: MomentTable, v: np.ndarray, n: int) -> MomentTable:
    """Raw moments of x - v up to order n from raw moments of x.

    Binomial expansion; exact.  The input table must hold at least order n.
    """
    table.require_order(n)
    vx, vy = float(v[0]), float(v[1])
    powx = [1.0]
    powy = [1.0]
    for k in range(n):
        powx.append(powx[-1] * (-vx))
        powy.append(powy[-1] * (-vy))
    out: dict[tuple[int, int], float] = {}
    for i in range(n + 1):
        for j in range(n + 1 - i):
            acc = 0.0
            for p in range(i + 1):
                ci = math.comb(i, p) * powx[i - p]
                for q in range(j + 1):
                    acc += ci * math.comb(j, q) * powy[j - q] * table[(p, q)]
            out[(i, j)] = acc
    return MomentTable(n, out)


def to_ego_frame(
    table: MomentTable, pose: EgoPose, ell: Ellipsoid
) -> tuple[MomentTable, Ellipsoid]:
    """Express agent moments and the collision form in the ego body frame.

    Returns the translated moment table (same order as the input) and the
    rotated quadratic form.  Mixture moment tables may be passed directly:
    translation is linear in the moments, so translating the mixed table
    equals mixing translated component tables.
    """
    moved = translate_moments(table, pose.position, table.max_order)
    return moved, rotate_form(ell, pose.theta)
