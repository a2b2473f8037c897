"""Scalar/bivariate mixture moments and trigonometric moment machinery."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajrisk.distributions import (
    Gaussian2D,
    Gaussian2DMixture,
    MomentTable,
    ScalarComponent,
    ScalarMixture,
    char_fn_sum,
    gaussian2d_raw_moments,
    mixture_moment_table,
    trig_moment,
    trig_moment_from_char_fn,
)
from trajrisk.errors import ValidationError


# -- scalar components and mixtures -----------------------------------------


def test_scalar_component_moments_match_closed_form():
    # central Gaussian: odd moments vanish, even are (n-1)!! sigma^n
    c = ScalarComponent(0.0, 4.0)
    assert c.raw_moment(0) == 1.0
    assert c.raw_moment(1) == 0.0
    assert c.raw_moment(2) == pytest.approx(4.0)
    assert c.raw_moment(3) == 0.0
    assert c.raw_moment(4) == pytest.approx(3 * 16.0)
    assert c.raw_moment(6) == pytest.approx(15 * 64.0)


def test_scalar_component_shifted_moments():
    # E[(Z+1)^n] for Z standard normal, by binomial expansion
    c = ScalarComponent(1.0, 1.0)
    assert c.raw_moment(2) == pytest.approx(2.0)
    assert c.raw_moment(3) == pytest.approx(4.0)
    assert c.raw_moment(4) == pytest.approx(10.0)
    assert c.raw_moment(6) == pytest.approx(76.0)


def test_scalar_mixture_mean_variance():
    mix = ScalarMixture(
        [ScalarComponent(-1.0, 0.5), ScalarComponent(2.0, 2.0)], [0.25, 0.75]
    )
    assert mix.mean == pytest.approx(0.25 * -1.0 + 0.75 * 2.0)
    second = 0.25 * (0.5 + 1.0) + 0.75 * (2.0 + 4.0)
    assert mix.variance == pytest.approx(second - mix.mean**2)
    assert mix.raw_moment(1) == pytest.approx(mix.mean)
    assert mix.raw_moment(2) == pytest.approx(second)


def test_point_mixture():
    p = ScalarMixture.point(0.7)
    assert p.mean == 0.7
    assert p.variance == 0.0
    assert p.raw_moment(3) == pytest.approx(0.7**3)
    # characteristic function of a constant is a pure phase
    z = p.char_fn(2.0)
    assert z == pytest.approx(complex(math.cos(1.4), math.sin(1.4)))


def test_mixture_weights_must_sum_to_one():
    with pytest.raises(ValidationError):
        ScalarMixture([ScalarComponent(0.0, 1.0)], [0.5])


@given(
    t=st.floats(-30.0, 30.0),
    m1=st.floats(-3.0, 3.0),
    v1=st.floats(0.0, 4.0),
    m2=st.floats(-3.0, 3.0),
    v2=st.floats(0.0, 4.0),
    w=st.floats(0.05, 0.95),
)
@settings(max_examples=200, deadline=None)
def test_char_fn_hermitian_and_bounded(t, m1, v1, m2, v2, w):
    mix = ScalarMixture(
        [ScalarComponent(m1, v1), ScalarComponent(m2, v2)], [w, 1.0 - w]
    )
    z_pos = mix.char_fn(t)
    z_neg = mix.char_fn(-t)
    assert abs(z_pos) <= 1.0 + 1e-12
    assert z_neg == pytest.approx(z_pos.conjugate(), abs=1e-12)
    assert mix.char_fn(0.0) == pytest.approx(1.0)


def test_char_fn_sum_is_product_of_factors():
    a = ScalarMixture.single(0.3, 0.2)
    b = ScalarMixture.single(-0.1, 0.05)
    t = 1.7
    got = char_fn_sum([a, b], t, offset=0.4)
    want = a.char_fn(t) * b.char_fn(t) * complex(math.cos(0.4 * t), math.sin(0.4 * t))
    assert got == pytest.approx(want, abs=1e-14)


# -- trigonometric moments ----------------------------------------------------


def _trig_quadrature(mix: ScalarMixture, m: int, n: int) -> float:
    """Independent oracle: integrate cos^m sin^n against each component."""
    from scipy.integrate import quad

    total = 0.0
    for w, comp in zip(mix.weights, mix.components):
        if comp.variance == 0.0:
            total += w * math.cos(comp.mean) ** m * math.sin(comp.mean) ** n
            continue
        sd = math.sqrt(comp.variance)

        def f(u, mu=comp.mean, sd=sd):
            x = mu + sd * u
            return (
                math.cos(x) ** m
                * math.sin(x) ** n
                * math.exp(-0.5 * u * u)
                / math.sqrt(2 * math.pi)
            )

        val, _ = quad(f, -12.0, 12.0, limit=200, epsabs=1e-13, epsrel=1e-13)
        total += w * val
    return total


@pytest.mark.parametrize("m,n", [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
                                 (3, 1), (2, 2), (0, 4), (5, 3)])
def test_trig_moments_match_quadrature(m, n):
    mix = ScalarMixture(
        [ScalarComponent(0.4, 0.09), ScalarComponent(-1.1, 0.25)], [0.6, 0.4]
    )
    assert trig_moment(mix, m, n) == pytest.approx(
        _trig_quadrature(mix, m, n), abs=1e-10
    )


def test_trig_pythagoras():
    mix = ScalarMixture.single(0.8, 0.3)
    assert trig_moment(mix, 2, 0) + trig_moment(mix, 0, 2) == pytest.approx(1.0)
    # fourth-degree variant: (c^2+s^2)^2 = 1
    total = (
        trig_moment(mix, 4, 0)
        + 2 * trig_moment(mix, 2, 2)
        + trig_moment(mix, 0, 4)
    )
    assert total == pytest.approx(1.0, abs=1e-12)


def test_trig_moment_rejects_bad_char_fn():
    # a "characteristic function" that is not Hermitian leaves an
    # imaginary residual and must raise rather than return garbage
    from trajrisk.errors import NumericalError

    with pytest.raises(NumericalError):
        trig_moment_from_char_fn(lambda f: 1.0 + 0.5j if f >= 0 else 1.0, 1, 0)


def test_trig_moment_rejects_negative_powers():
    with pytest.raises(ValidationError):
        trig_moment_from_char_fn(lambda f: 1.0, -1, 0)


# -- bivariate Gaussians and moment tables -----------------------------------


def _hermite_oracle(g: Gaussian2D, a: int, b: int) -> float:
    """E[x^a y^b] by Gauss-Hermite quadrature (exact for polynomials)."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(24)
    w2 = np.outer(weights, weights) / (2 * math.pi)
    u, v = np.meshgrid(nodes, nodes, indexing="ij")
    # allow singular covariances via eigendecomposition square root
    vals, vecs = np.linalg.eigh(g.cov)
    root = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    x = g.mean[0] + root[0, 0] * u + root[0, 1] * v
    y = g.mean[1] + root[1, 0] * u + root[1, 1] * v
    return float(np.sum(w2 * x**a * y**b))


@pytest.mark.parametrize(
    "mean,cov",
    [
        ((0.0, 0.0), ((1.0, 0.0), (0.0, 1.0))),
        ((1.5, -0.5), ((2.0, 0.7), (0.7, 0.8))),
        ((-2.0, 3.0), ((0.3, -0.2), (-0.2, 1.1))),
    ],
)
def test_gaussian2d_raw_moments_match_quadrature(mean, cov):
    g = Gaussian2D(np.array(mean), np.array(cov))
    table = gaussian2d_raw_moments(g, 6)
    for a in range(7):
        for b in range(7 - a):
            assert table[(a, b)] == pytest.approx(
                _hermite_oracle(g, a, b), rel=1e-11, abs=1e-11
            ), (a, b)


def test_gaussian2d_degenerate_covariance():
    g = Gaussian2D(np.array([1.0, 2.0]), np.zeros((2, 2)))
    table = gaussian2d_raw_moments(g, 4)
    assert table[(2, 1)] == pytest.approx(1.0**2 * 2.0)
    assert table[(0, 4)] == pytest.approx(16.0)


def test_gaussian2d_rejects_indefinite_covariance():
    with pytest.raises(ValidationError, match="positive semidefinite"):
        Gaussian2D(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_moment_table_round_trips_mean_covariance():
    g = Gaussian2D(np.array([0.4, -1.2]), np.array([[1.5, 0.3], [0.3, 0.9]]))
    table = gaussian2d_raw_moments(g, 2)
    assert np.allclose(table.mean(), g.mean)
    assert np.allclose(table.covariance(), g.cov, atol=1e-12)


def test_moment_table_is_complete_and_bounded():
    table = gaussian2d_raw_moments(Gaussian2D(np.zeros(2), np.eye(2)), 2)
    with pytest.raises(ValidationError):
        table[(2, 1)]  # order 3 from an order-2 table
    with pytest.raises(ValidationError):
        table.require_order(4)
    with pytest.raises(ValidationError):
        MomentTable(2, {(0, 0): 1.0})  # missing indices


def test_moment_table_rejects_jensen_violation():
    entries = {(0, 0): 1.0, (1, 0): 2.0, (0, 1): 0.0,
               (2, 0): 1.0, (1, 1): 0.0, (0, 2): 1.0}
    with pytest.raises(ValidationError, match="Jensen"):
        MomentTable(2, entries)


def test_mixture_moment_table_is_weighted_average():
    g1 = Gaussian2D(np.array([0.0, 0.0]), np.eye(2))
    g2 = Gaussian2D(np.array([2.0, -1.0]), np.array([[0.5, 0.1], [0.1, 0.4]]))
    mix = Gaussian2DMixture((g1, g2), (0.3, 0.7))
    table = mixture_moment_table(mix, 4)
    t1 = gaussian2d_raw_moments(g1, 4)
    t2 = gaussian2d_raw_moments(g2, 4)
    for a in range(5):
        for b in range(5 - a):
            assert table[(a, b)] == pytest.approx(
                0.3 * t1[(a, b)] + 0.7 * t2[(a, b)]
            )
    # mixture covariance picks up the between-mode spread
    assert np.allclose(table.covariance(), mix.covariance(), atol=1e-12)
