"""Risk bounds from a univariate sum-of-squares program.

The quadratic-form bound in :mod:`trajrisk.chebyshev` uses only two
moments of g(x) = Q(x) - 1.  Given more moments of g, a tighter
distributionally-robust bound comes from searching over polynomials that
dominate the indicator of the nonpositive axis:

    minimize   E[p(g)] = sum_k c_k E[g^k]
    subject to p(x) - 1 = s1(x) - x * s2(x),   s1, s2, p all SOS.

The constraint makes p >= 1 on x <= 0, and p being SOS makes p >= 0
everywhere, so E[p(g)] >= P(g <= 0) for every distribution with the
given moments.  Parameterizing p, s1, s2 by Gram matrices turns this
into a small block-diagonal SDP solved by :mod:`trajrisk.sdp`.

Degrees are even; degree 2 reproduces the analytic one-tailed Chebyshev
bound, degrees 4 and 6 are strictly tighter whenever higher moments
carry information.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .chebyshev import FormLike, RiskBound, _form_matrix, cheb_bound_quadratic
from .distributions import MomentTable
from .errors import ValidationError
from .sdp import SdpSolution, solve_dense_sdp

__all__ = [
    "MomentVector",
    "SosProgram",
    "moments_of_g",
    "normalize_moments",
    "build_sos_program",
    "solve_sdp",
    "sos_risk_bound",
]

_HANKEL_TOL = 1e-9

Poly2 = Dict[Tuple[int, int], float]


@dataclass(frozen=True)
class MomentVector:
    """Raw moments m_k = E[g^k], k = 0..d, of the collision margin g.

    `scale` records the cumulative normalization applied: the vector
    describes g divided by `scale`.
    """

    d: int
    m: Tuple[float, ...]
    scale: float = 1.0

    def __post_init__(self):
        if self.d < 1 or len(self.m) != self.d + 1:
            raise ValidationError("moment vector must hold m_0..m_d")
        if abs(self.m[0] - 1.0) > 1e-9:
            raise ValidationError(f"zeroth moment must be 1, got {self.m[0]}")
        if not self.scale > 0.0:
            raise ValidationError("scale must be positive")
        object.__setattr__(self, "m", tuple(float(v) for v in self.m))

    def hankel(self) -> np.ndarray:
        """Principal Hankel matrix H_ij = m_{i+j}, i,j = 0..floor(d/2)."""
        half = self.d // 2
        return np.array(
            [[self.m[i + j] for j in range(half + 1)] for i in range(half + 1)]
        )

    def is_consistent(self, tol: float = _HANKEL_TOL) -> bool:
        """Necessary moment-validity check: Hankel PSD within `tol`."""
        h = self.hankel()
        bound = tol * max(1.0, float(np.abs(h).max()))
        return float(np.linalg.eigvalsh(h).min()) >= -bound


def _poly_mul(a: Poly2, b: Poly2) -> Poly2:
    out: Poly2 = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, 0.0) + c1 * c2
    return out


def _poly_pow(p: Poly2, k: int) -> Poly2:
    out: Poly2 = {(0, 0): 1.0}
    for _ in range(k):
        out = _poly_mul(out, p)
    return out


def moments_of_g(q: FormLike, x_moments: MomentTable, d: int) -> MomentVector:
    """Moments of g(x) = x'Qx - 1 from raw position moments.

    Expands (x'Qx - 1)^k as a bivariate polynomial and applies linearity
    of expectation term by term against the moment table, so the result
    is exact for any distribution the table describes (Gaussian,
    mixture, or propagated).  Requires moments up to order 2d.
    """
    if d < 1:
        raise ValidationError("need at least one moment of g")
    x_moments.require_order(2 * d)
    qm = _form_matrix(q)
    g_poly: Poly2 = {
        (2, 0): float(qm[0, 0]),
        (1, 1): float(2.0 * qm[0, 1]),
        (0, 2): float(qm[1, 1]),
        (0, 0): -1.0,
    }
    moments = [1.0]
    power: Poly2 = {(0, 0): 1.0}
    for _ in range(d):
        power = _poly_mul(power, g_poly)
        moments.append(
            sum(coeff * x_moments[key] for key, coeff in power.items())
        )
    return MomentVector(d, tuple(moments))


def normalize_moments(mv: MomentVector) -> MomentVector:
    """Rescale to unit second moment: m_k -> m_k / m_2^{k/2}.

    P(g <= 0) = P(g/c <= 0) for any c > 0, so the bound is unchanged
    while the program's data become O(1) across k, which is what the
    conditioning of the Gram parameterization needs.
    """
    if mv.d < 2:
        raise ValidationError("normalization needs m_2")
    m2 = mv.m[2]
    if not m2 > 0.0:
        raise ValidationError(f"second moment must be positive, got {m2}")
    c = float(np.sqrt(m2))
    scaled = tuple(mv.m[k] / c**k for k in range(mv.d + 1))
    return MomentVector(mv.d, scaled, mv.scale * c)


def _coeff_selector(size: int, k: int) -> np.ndarray:
    """Matrix E with <E, G> = coefficient of x^k of the Gram form of G."""
    e = np.zeros((size, size))
    for i in range(size):
        j = k - i
        if 0 <= j < size:
            e[i, j] = 1.0
    return e


@dataclass(frozen=True)
class SosProgram:
    """SDP data for the degree-d dominating-polynomial search.

    Decision variable is blkdiag(G_p, G_s1, G_s2); the k-th equality
    constraint matches the coefficient of x^k on both sides of
    p(x) - 1 = s1(x) - x*s2(x), and the objective <Hankel(m), G_p>
    equals E[p(g)].
    """

    degree: int
    moments: MomentVector
    block_dims: Tuple[int, int, int]
    c_mat: np.ndarray
    a_mats: Tuple[np.ndarray, ...]
    b: Tuple[float, ...]

    @property
    def dimension(self) -> int:
        return sum(self.block_dims)

    def split_blocks(self, x: np.ndarray):
        """Slice a solution matrix into (G_p, G_s1, G_s2)."""
        out = []
        start = 0
        for dim in self.block_dims:
            out.append(x[start:start + dim, start:start + dim])
            start += dim
        return tuple(out)

    def p_coefficients(self, x: np.ndarray) -> np.ndarray:
        """Coefficients (c_0..c_d) of p recovered from a solution."""
        g_p = self.split_blocks(x)[0]
        size = self.block_dims[0]
        return np.array(
            [float(np.tensordot(_coeff_selector(size, k), g_p))
             for k in range(self.degree + 1)]
        )


def build_sos_program(mv: MomentVector) -> SosProgram:
    """Assemble the block SDP for an even-degree moment vector.

    Degree d = 2n gives Gram sizes n+1 (p), n+1 (s1, degree d) and
    n (s2, degree d-2), with d+1 coefficient-matching constraints.
    """
    d = mv.d
    if d < 2:
        raise ValidationError("SOS program needs degree >= 2")
    if d % 2 != 0:
        raise ValidationError("only even degrees are supported")
    n = d // 2
    dims = (n + 1, n + 1, n)
    total = sum(dims)
    offs = np.cumsum((0,) + dims)

    def embed(block: np.ndarray, which: int) -> np.ndarray:
        out = np.zeros((total, total))
        i = offs[which]
        j = i + dims[which]
        out[i:j, i:j] = block
        return out

    c_mat = embed(mv.hankel(), 0)
    a_mats = []
    b = []
    for k in range(d + 1):
        a_k = embed(_coeff_selector(dims[0], k), 0)
        a_k -= embed(_coeff_selector(dims[1], k), 1)
        if k >= 1:
            a_k += embed(_coeff_selector(dims[2], k - 1), 2)
        a_mats.append(a_k)
        b.append(1.0 if k == 0 else 0.0)
    return SosProgram(d, mv, dims, c_mat, tuple(a_mats), tuple(b))


def solve_sdp(prog: SosProgram, tol: float = 1e-9,
              max_iter: int = 100) -> SdpSolution:
    """Solve an SOS program, screening inconsistent moment input.

    A moment vector whose Hankel matrix is not PSD admits no
    representing distribution; the program's objective is then unbounded
    below, so it is reported as "infeasible" without iterating.
    """
    if not prog.moments.is_consistent():
        dim = prog.dimension
        zero = np.zeros((dim, dim))
        return SdpSolution(
            primal_objective=float("nan"), dual_objective=float("nan"),
            x=zero, y=np.zeros(len(prog.b)), s=zero, status="infeasible",
            duality_gap=float("nan"), primal_residual=float("nan"),
            dual_residual=float("nan"), iterations=0,
        )
    return solve_dense_sdp(prog.c_mat, prog.a_mats, prog.b,
                           tol=tol, max_iter=max_iter)


def sos_risk_bound(q: FormLike, x_moments: MomentTable, d: int,
                   tol: float = 1e-9) -> RiskBound:
    """Degree-d SOS upper bound on P(Q(x) <= 1) from raw moments.

    Composite of moment extraction, normalization, program assembly and
    the interior-point solve.  A non-optimal solver status degrades the
    answer to the quadratic Chebyshev bound (still a valid upper bound)
    and records the downgrade in the result's `note`.
    """
    mv = normalize_moments(moments_of_g(q, x_moments, d))
    sol = solve_sdp(build_sos_program(mv), tol=tol)
    if sol.status != "optimal":
        fallback = cheb_bound_quadratic(q, x_moments)
        return RiskBound(
            fallback.value, f"sos-d{d}", fallback.moments_used,
            note=f"sdp status {sol.status}; degraded to chebyshev-quad",
        )
    value = min(max(sol.primal_objective, 0.0), 1.0)
    return RiskBound(value, f"sos-d{d}", 2 * d)
