"""Scalar and bivariate mixture distributions with exact raw moments and
characteristic functions.

Every component is either a Gaussian or a point mass; point masses are
modeled as zero-variance Gaussians so deterministic inputs flow through the
same code paths.  Mixture moments and characteristic functions are weighted
sums of the component quantities.  Trigonometric moments E[cos^m X sin^n X]
are assembled from characteristic-function values at integer frequencies,
which is exact for any distribution whose characteristic function is
available.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = [
    "MAX_MOMENT_ORDER",
    "ScalarComponent",
    "ScalarMixture",
    "Gaussian2D",
    "Gaussian2DMixture",
    "MomentTable",
    "char_fn",
    "char_fn_sum",
    "trig_moment",
    "trig_moment_from_char_fn",
    "mixture_moment",
    "gaussian2d_raw_moments",
    "mixture_moment_table",
]

# Highest raw-moment order handed out by this module.  Degree-6 SOS bounds on a
# quadratic form consume bivariate moments up to order 12, so the cap leaves
# headroom above that.
MAX_MOMENT_ORDER = 16

_WEIGHT_TOL = 1e-12
_SYM_TOL = 1e-12
_PSD_TOL = 1e-12
_IMAG_TOL = 1e-10


def _check_order(n: int) -> None:
    if n < 0:
        raise ValidationError(f"moment order must be nonnegative, got {n}")
    if n > MAX_MOMENT_ORDER:
        raise ValidationError(
            f"moment order {n} exceeds the supported cap {MAX_MOMENT_ORDER}"
        )


def _odd_factorial(k: int) -> int:
    """(k-1)!! for even k, the number of pairings of k items."""
    out = 1
    for j in range(k - 1, 0, -2):
        out *= j
    return out


@dataclass(frozen=True)
class ScalarComponent:
    """One mixture component on the real line.

    Parameters
    ----------
    mean : float
        Component mean.
    variance : float
        Component variance; zero denotes a point mass.
    """

    mean: float
    variance: float

    def __post_init__(self):
        if not math.isfinite(self.mean) or not math.isfinite(self.variance):
            raise ValidationError("component mean/variance must be finite")
        if self.variance < 0.0:
            raise ValidationError(f"variance must be >= 0, got {self.variance}")

    @property
    def kind(self) -> str:
        return "point-mass" if self.variance == 0.0 else "gaussian"

    def char_fn(self, t: float) -> complex:
        return cmath.exp(1j * t * self.mean - 0.5 * self.variance * t * t)

    def raw_moment(self, n: int) -> float:
        """E[X^n], exact."""
        _check_order(n)
        if self.variance == 0.0:
            return self.mean ** n
        sigma2 = self.variance
        total = 0.0
        for k in range(0, n + 1, 2):
            total += (
                math.comb(n, k)
                * _odd_factorial(k)
                * sigma2 ** (k // 2)
                * self.mean ** (n - k)
            )
        return total


def _check_weights(weights: Sequence[float], where: str) -> tuple[float, ...]:
    w = tuple(float(x) for x in weights)
    if not w:
        raise ValidationError(f"{where}: mixture needs at least one component")
    if any(x < 0.0 for x in w):
        raise ValidationError(f"{where}: negative mixture weight")
    s = math.fsum(w)
    if abs(s - 1.0) > _WEIGHT_TOL:
        raise ValidationError(f"{where}: mixture weights sum to {s!r}, expected 1")
    return w


@dataclass(frozen=True)
class ScalarMixture:
    """Finite mixture of scalar Gaussian / point-mass components."""

    components: tuple[ScalarComponent, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        w = _check_weights(self.weights, "ScalarMixture")
        if len(w) != len(comps):
            raise ValidationError(
                f"ScalarMixture: {len(comps)} components but {len(w)} weights"
            )
        object.__setattr__(self, "weights", w)

    @classmethod
    def single(cls, mean: float, variance: float) -> "ScalarMixture":
        return cls((ScalarComponent(mean, variance),), (1.0,))

    @classmethod
    def point(cls, value: float) -> "ScalarMixture":
        return cls.single(value, 0.0)

    def char_fn(self, t: float) -> complex:
        return sum(
            w * c.char_fn(t) for w, c in zip(self.weights, self.components)
        )

    def raw_moment(self, n: int) -> float:
        return math.fsum(
            w * c.raw_moment(n) for w, c in zip(self.weights, self.components)
        )

    @property
    def mean(self) -> float:
        return self.raw_moment(1)

    @property
    def variance(self) -> float:
        m1 = self.raw_moment(1)
        return self.raw_moment(2) - m1 * m1


def _as_cov(cov) -> np.ndarray:
    c = np.asarray(cov, dtype=float)
    if c.shape != (2, 2):
        raise ValidationError(f"covariance must be 2x2, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValidationError("covariance has non-finite entries")
    if abs(c[0, 1] - c[1, 0]) > _SYM_TOL * max(1.0, abs(c[0, 1]), abs(c[1, 0])):
        raise ValidationError("covariance must be symmetric within 1e-12")
    sym = 0.5 * (c + c.T)
    eigvals = np.linalg.eigvalsh(sym)
    if eigvals.min() < -_PSD_TOL * max(1.0, eigvals.max()):
        raise ValidationError(
            f"covariance is not positive semidefinite (eigenvalues {eigvals})"
        )
    sym.flags.writeable = False
    return sym


@dataclass(frozen=True)
class Gaussian2D:
    """Bivariate Gaussian, possibly degenerate (rank < 2)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float)
        if m.shape != (2,):
            raise ValidationError(f"mean must have shape (2,), got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("mean has non-finite entries")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", _as_cov(self.cov))

    def raw_moments(self, max_order: int) -> "MomentTable":
        return gaussian2d_raw_moments(self, max_order)


@dataclass(frozen=True)
class Gaussian2DMixture:
    """Finite mixture of bivariate Gaussians (one prediction mode each)."""

    components: tuple[Gaussian2D, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        w = _check_weights(self.weights, "Gaussian2DMixture")
        if len(w) != len(comps):
            raise ValidationError(
                f"Gaussian2DMixture: {len(comps)} components but {len(w)} weights"
            )
        object.__setattr__(self, "weights", w)

    @property
    def mean(self) -> np.ndarray:
        return sum(w * c.mean for w, c in zip(self.weights, self.components))

    def covariance(self) -> np.ndarray:
        mu = self.mean
        acc = np.zeros((2, 2))
        for w, c in zip(self.weights, self.components):
            d = c.mean - mu
            acc += w * (c.cov + np.outer(d, d))
        return acc


class MomentTable:
    """Raw moments E[x^a y^b] for all multi-indices with a + b <= max_order.

    The table is complete by construction: every index up to ``max_order`` is
    present, and lookups beyond the stored order raise instead of silently
    truncating.
    """

    __slots__ = ("max_order", "entries")

    def __init__(self, max_order: int, entries: Mapping[tuple[int, int], float]):
        _check_order(max_order)
        store: dict[tuple[int, int], float] = {}
        for a in range(max_order + 1):
            for b in range(max_order + 1 - a):
                try:
                    store[(a, b)] = float(entries[(a, b)])
                except KeyError:
                    raise ValidationError(
                        f"moment table missing index {(a, b)} at max_order {max_order}"
                    ) from None
        if abs(store[(0, 0)] - 1.0) > 1e-9:
            raise ValidationError(
                f"zeroth moment must be 1, got {store[(0, 0)]!r}"
            )
        if max_order >= 2:
            for pure in ((2, 0), (0, 2)):
                lo = store[(pure[0] // 2, pure[1] // 2)] ** 2
                if store[pure] < lo - 1e-9 * max(1.0, abs(lo)):
                    raise ValidationError(
                        f"second moment at {pure} violates Jensen: "
                        f"{store[pure]} < {lo}"
                    )
        object.__setattr__(self, "max_order", max_order)
        object.__setattr__(self, "entries", MappingProxyType(store))

    def __setattr__(self, name, value):
        raise AttributeError("MomentTable is immutable")

    def __getitem__(self, index: tuple[int, int]) -> float:
        a, b = index
        if a < 0 or b < 0:
            raise ValidationError(f"invalid moment index {index}")
        if a + b > self.max_order:
            raise ValidationError(
                f"moment {index} requested but table only holds order "
                f"{self.max_order}"
            )
        return self.entries[(a, b)]

    def require_order(self, n: int) -> None:
        if self.max_order < n:
            raise ValidationError(
                f"operation needs moments up to order {n}, table holds "
                f"{self.max_order}"
            )

    def mean(self) -> np.ndarray:
        self.require_order(1)
        return np.array([self.entries[(1, 0)], self.entries[(0, 1)]])

    def covariance(self) -> np.ndarray:
        self.require_order(2)
        mx, my = self.entries[(1, 0)], self.entries[(0, 1)]
        return np.array(
            [
                [self.entries[(2, 0)] - mx * mx, self.entries[(1, 1)] - mx * my],
                [self.entries[(1, 1)] - mx * my, self.entries[(0, 2)] - my * my],
            ]
        )

    def __repr__(self):
        return f"MomentTable(max_order={self.max_order})"


def char_fn(dist, t: float) -> complex:
    """Characteristic function E[exp(i t X)] of a scalar component or mixture."""
    return dist.char_fn(t)


def char_fn_sum(parts: Sequence, t: float, offset: float = 0.0) -> complex:
    """Characteristic function of ``offset + sum(parts)`` for independent parts.

    Independence turns the characteristic function of the sum into the product
    of the component characteristic functions; a deterministic offset
    contributes a pure phase.
    """
    out = cmath.exp(1j * t * offset)
    for p in parts:
        out *= p.char_fn(t)
    return out


def trig_moment_from_char_fn(phi: Callable[[int], complex], m: int, n: int) -> float:
    """E[cos^m X sin^n X] given the characteristic function at integer points.

    Writes cos X = (e^{iX} + e^{-iX})/2 and sin X = (e^{iX} - e^{-iX})/(2i),
    expands both binomials, and collects characteristic-function values at the
    integer frequencies 2(j + k) - m - n.  The assembled sum is real up to
    roundoff; a residual imaginary part above 1e-10 indicates a defective
    characteristic function and raises.
    """
    if m < 0 or n < 0:
        raise ValidationError(f"powers must be nonnegative, got ({m}, {n})")
    if m + n == 0:
        return 1.0
    acc = 0.0 + 0.0j
    for j in range(m + 1):
        cmj = math.comb(m, j)
        for k in range(n + 1):
            freq = 2 * (j + k) - m - n
            sign = -1.0 if (n - k) % 2 else 1.0
            acc += cmj * math.comb(n, k) * sign * phi(freq)
    acc /= (1j) ** n * 2 ** (m + n)
    if abs(acc.imag) > _IMAG_TOL:
        raise NumericalError(
            f"trig moment has imaginary residual {acc.imag:.3e}; "
            "characteristic function is inconsistent"
        )
    return acc.real


def trig_moment(dist, m: int, n: int) -> float:
    """E[cos^m X sin^n X] for a scalar component or mixture X."""
    return trig_moment_from_char_fn(lambda f: dist.char_fn(float(f)), m, n)


def mixture_moment(dist, index) -> float:
    """Raw moment of a scalar or bivariate mixture.

    ``index`` is an integer order for scalar inputs and an ``(a, b)``
    multi-index for bivariate ones.
    """
    if isinstance(dist, (ScalarMixture, ScalarComponent)):
        return dist.raw_moment(int(index))
    if isinstance(dist, Gaussian2D):
        a, b = index
        return _gaussian2d_moment(dist, int(a), int(b))
    if isinstance(dist, Gaussian2DMixture):
        a, b = index
        return math.fsum(
            w * _gaussian2d_moment(c, int(a), int(b))
            for w, c in zip(dist.weights, dist.components)
        )
    raise ValidationError(f"unsupported distribution type {type(dist).__name__}")


def _gaussian2d_fill(g: Gaussian2D, max_order: int) -> dict[tuple[int, int], float]:
    """Raw moments of a bivariate Gaussian by the integration-by-parts
    recursion E[x_i f(x)] = mu_i E[f] + sum_j Sigma_ij E[d f / d x_j]."""
    mx, my = float(g.mean[0]), float(g.mean[1])
    sxx, sxy, syy = float(g.cov[0, 0]), float(g.cov[0, 1]), float(g.cov[1, 1])
    t: dict[tuple[int, int], float] = {(0, 0): 1.0}
    for order in range(1, max_order + 1):
        for a in range(order, -1, -1):
            b = order - a
            if a >= 1:
                val = mx * t[(a - 1, b)]
                if a >= 2:
                    val += sxx * (a - 1) * t[(a - 2, b)]
                if b >= 1:
                    val += sxy * b * t[(a - 1, b - 1)]
            else:
                val = my * t[(0, b - 1)]
                if b >= 2:
                    val += syy * (b - 1) * t[(0, b - 2)]
            t[(a, b)] = val
    return t


def _gaussian2d_moment(g: Gaussian2D, a: int, b: int) -> float:
    _check_order(a + b)
    return _gaussian2d_fill(g, a + b)[(a, b)]


def gaussian2d_raw_moments(g: Gaussian2D, max_order: int) -> MomentTable:
    """Complete raw-moment table of a bivariate Gaussian up to ``max_order``."""
    _check_order(max_order)
    return MomentTable(max_order, _gaussian2d_fill(g, max_order))


def mixture_moment_table(mix: Gaussian2DMixture, max_order: int) -> MomentTable:
    """Raw moments of a bivariate Gaussian mixture (weighted component sum)."""
    _check_order(max_order)
    acc: dict[tuple[int, int], float] = {}
    for w, comp in zip(mix.weights, mix.components):
        part = _gaussian2d_fill(comp, max_order)
        for key, val in part.items():
            acc[key] = acc.get(key, 0.0) + w * val
    return MomentTable(max_order, acc)
