"""CDF of Gaussian quadratic forms: spectral reduction, inversion, surrogate."""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajrisk.errors import ValidationError
from trajrisk.qfmvg import (
    SpectralForm,
    imhof_cdf,
    ltz_cdf,
    noncentral_chi2_cdf,
    spectral_reduce,
)

# Reference CDF values computed independently with mpmath at 40-50 digits:
# the noncentral chi-square by its Poisson-weighted regularized-gamma
# series, the weighted forms by adaptive quadrature of the inversion
# integral with an oscillation-aware tail (values stable to < 1e-30
# under doubling of the integration split point).
NCX2_REFS = [
    # (x, df, nc, cdf)
    (1.0, 2.0, 0.0, 0.39346934028736658),
    (2.5, 3.0, 1.7, 0.31760123259798634),
    (0.8, 1.0, 4.0, 0.1325564771960376),
    (12.0, 5.0, 9.5, 0.40582459949668133),
    (0.05, 2.0, 0.3, 0.02129065993201732),
]

FORM_REFS = [
    # (lambdas, noncentralities, q, cdf)
    ((2.0, 0.5), (1.0, 0.25), 1.0, 0.224566398868086258),
    ((3.0, 1.0, 0.2), (0.5, 2.0, 0.0), 2.0, 0.165765043377642529),
]


# -- spectral reduction -------------------------------------------------------


def test_spectral_reduce_isotropic_identity():
    # standard normal against the unit disk: two unit eigenvalues, central
    form = spectral_reduce(np.eye(2), np.zeros(2), np.eye(2))
    assert form.lambdas == pytest.approx((1.0, 1.0))
    assert form.noncentralities == pytest.approx((0.0, 0.0))
    assert form.q == pytest.approx(1.0)


def test_spectral_reduce_known_diagonal_case():
    # x ~ N((1, 0), diag(4, 1)), form diag(1/4, 1): whitening gives
    # Sigma^(1/2) Q Sigma^(1/2) = I, and the whitened mean puts delta^2 =
    # (0.5)^2 on one unit eigenvalue.  Equal eigenvalues make the pairing
    # order arbitrary, so compare as a sorted pair set.
    form = spectral_reduce(np.diag([0.25, 1.0]), np.array([1.0, 0.0]),
                           np.diag([4.0, 1.0]))
    pairs = sorted(zip(form.lambdas, form.noncentralities))
    assert pairs == pytest.approx([(1.0, 0.0), (1.0, 0.25)])
    assert form.q == pytest.approx(1.0)


@given(
    mx=st.floats(-3.0, 3.0),
    my=st.floats(-3.0, 3.0),
    scale=st.floats(0.2, 3.0),
)
@settings(max_examples=60, deadline=None)
def test_spectral_reduce_matches_direct_quadratic(mx, my, scale):
    """sum lambda_r chi2(delta_r^2) must reproduce E and Var of x^T Q x."""
    q = np.array([[0.8, 0.2], [0.2, 1.1]]) * scale
    cov = np.array([[1.3, -0.4], [-0.4, 0.7]])
    mean = np.array([mx, my])
    form = spectral_reduce(q, mean, cov)
    lam = np.array(form.lambdas)
    nc = np.array(form.noncentralities)
    # matching holds up to the deterministic offset folded into q
    offset = 1.0 - form.q
    e_direct = float(np.trace(q @ cov) + mean @ q @ mean)
    v_direct = float(2 * np.trace(q @ cov @ q @ cov) + 4 * mean @ q @ cov @ q @ mean)
    assert float(np.sum(lam * (1 + nc))) + offset == pytest.approx(e_direct, rel=1e-9)
    assert float(np.sum(lam**2 * (2 + 4 * nc))) == pytest.approx(v_direct, rel=1e-9)


def test_spectral_reduce_degenerate_covariance_folds_offset():
    # zero covariance: no eigenvalues, event reduces to the sign of q
    form = spectral_reduce(np.eye(2), np.array([2.0, 0.0]), np.zeros((2, 2)))
    assert form.deterministic
    assert form.q == pytest.approx(1.0 - 4.0)
    assert imhof_cdf(form).probability == 0.0
    assert ltz_cdf(form).probability == 0.0
    inside = spectral_reduce(np.eye(2), np.array([0.5, 0.0]), np.zeros((2, 2)))
    assert imhof_cdf(inside).probability == 1.0
    assert ltz_cdf(inside).probability == 1.0


def test_spectral_reduce_rejects_indefinite_form():
    with pytest.raises(ValidationError):
        spectral_reduce(np.diag([1.0, -1.0]), np.zeros(2), np.eye(2))


def test_spectral_form_validation():
    with pytest.raises(ValidationError):
        SpectralForm((1.0, 2.0), (0.0, 0.0), 1.0)  # not descending
    with pytest.raises(ValidationError):
        SpectralForm((1.0,), (-0.1,), 1.0)  # negative noncentrality
    with pytest.raises(ValidationError):
        SpectralForm((0.0,), (0.0,), 1.0)  # zero eigenvalue


# -- noncentral chi-square series ---------------------------------------------


@pytest.mark.parametrize("x,df,nc,ref", NCX2_REFS)
def test_noncentral_chi2_cdf_reference_values(x, df, nc, ref):
    assert noncentral_chi2_cdf(x, df, nc) == pytest.approx(ref, abs=1e-13)


def test_noncentral_chi2_cdf_edge_cases():
    assert noncentral_chi2_cdf(0.0, 2.0, 1.0) == 0.0
    assert noncentral_chi2_cdf(-1.0, 2.0, 1.0) == 0.0
    # large x saturates to 1
    assert noncentral_chi2_cdf(1e4, 2.0, 1.0) == pytest.approx(1.0)


def test_noncentral_chi2_matches_scipy():
    from scipy.stats import ncx2

    for x, df, nc in [(0.5, 1.0, 0.2), (3.0, 4.0, 2.5), (7.5, 2.5, 6.0)]:
        assert noncentral_chi2_cdf(x, df, nc) == pytest.approx(
            float(ncx2.cdf(x, df, nc)), abs=1e-12
        )


# -- inversion integral -------------------------------------------------------


def test_imhof_equal_eigenvalue_anchor():
    # two unit central eigenvalues against q=1: exactly 1 - exp(-1/2)
    form = SpectralForm((1.0, 1.0), (0.0, 0.0), 1.0)
    got = imhof_cdf(form, tol=1e-10)
    assert got.probability == pytest.approx(1.0 - math.exp(-0.5), abs=1e-10)
    assert got.error_bound is not None and got.error_bound <= 1e-8


@pytest.mark.parametrize("lambdas,ncs,q,ref", FORM_REFS)
def test_imhof_reference_forms(lambdas, ncs, q, ref):
    got = imhof_cdf(SpectralForm(lambdas, ncs, q), tol=1e-10)
    assert got.probability == pytest.approx(ref, abs=1e-9)


def test_imhof_agrees_with_ncx2_on_equal_eigenvalues():
    # lambda I with common noncentrality reduces to a scaled chi-square
    lam, d2, q = 0.7, 1.3, 1.9
    form = SpectralForm((lam, lam), (d2, d2), q)
    direct = noncentral_chi2_cdf(q / lam, 2.0, 2 * d2)
    assert imhof_cdf(form, tol=1e-12).probability == pytest.approx(direct, abs=1e-10)


def test_imhof_tolerance_is_honoured():
    form = SpectralForm((2.0, 0.5), (1.0, 0.25), 1.0)
    ref = FORM_REFS[0][3]
    for tol in (1e-6, 1e-8, 1e-10):
        got = imhof_cdf(form, tol=tol)
        assert abs(got.probability - ref) <= tol + 1e-12
        assert got.error_bound is not None


def test_imhof_extreme_tails_clamp_cleanly():
    # far outside: probability indistinguishable from 0
    far = SpectralForm((1.0,), (400.0,), 1.0)
    assert imhof_cdf(far, tol=1e-8).probability <= 1e-12
    # fully containing: indistinguishable from 1
    near = SpectralForm((1e-4, 1e-5), (0.0, 0.0), 1.0)
    assert imhof_cdf(near, tol=1e-8).probability >= 1.0 - 1e-12


# -- moment-matched surrogate -------------------------------------------------


def test_ltz_exact_on_single_chi_square():
    # one eigenvalue: the surrogate is the distribution itself
    form = SpectralForm((2.0,), (1.5,), 3.0)
    assert ltz_cdf(form).probability == pytest.approx(
        noncentral_chi2_cdf(1.5, 1.0, 1.5), abs=1e-12
    )


def test_ltz_exact_on_equal_eigenvalues():
    lam, d2 = 0.5, 0.8
    form = SpectralForm((lam, lam, lam), (d2, d2, d2), 1.0)
    direct = noncentral_chi2_cdf(1.0 / lam, 3.0, 3 * d2)
    assert ltz_cdf(form).probability == pytest.approx(direct, abs=1e-9)


@pytest.mark.parametrize("lambdas,ncs,q,ref", FORM_REFS)
def test_ltz_close_to_true_cdf(lambdas, ncs, q, ref):
    # cumulant-matched surrogate: no certificate; on these deliberately
    # skewed, strongly noncentral spectra its error sits near 1e-2
    # (benign encounter geometries land around 1e-4, see the acceptance
    # corpus test)
    got = ltz_cdf(SpectralForm(lambdas, ncs, q))
    assert got.probability == pytest.approx(ref, abs=2e-2)
    assert got.error_bound is None
    assert got.detail in ("skew-kurtosis", "skew-only")


def test_ltz_branches_are_reachable():
    # strongly skewed spectrum triggers the skew-kurtosis branch
    a = ltz_cdf(SpectralForm((5.0, 0.1), (3.0, 0.0), 2.0))
    # near-symmetric spectrum with small skew uses the central branch
    b = ltz_cdf(SpectralForm((1.0, 1.0, 1.0, 1.0), (0.0,) * 4, 4.0))
    assert {a.detail, b.detail} <= {"skew-kurtosis", "skew-only"}


def test_ltz_tracks_imhof_under_random_perturbations():
    # adversarial spectra (wide eigenvalue spread, noncentralities up to 4)
    # stress the surrogate well beyond typical encounter geometry; observed
    # worst error there is about 0.019
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(40):
        lam = np.sort(rng.uniform(0.1, 3.0, size=3))[::-1]
        nc = rng.uniform(0.0, 4.0, size=3)
        q = rng.uniform(0.5, 6.0)
        form = SpectralForm(tuple(lam), tuple(nc), float(q))
        diff = abs(ltz_cdf(form).probability - imhof_cdf(form, tol=1e-10).probability)
        worst = max(worst, diff)
    assert worst <= 5e-2


def test_imhof_runtime_smoke():
    form = SpectralForm((1.0, 1.0), (0.0, 0.0), 1.0)
    imhof_cdf(form, tol=1e-8)  # warm any lazy setup
    t0 = time.perf_counter()
    for _ in range(20):
        imhof_cdf(form, tol=1e-8)
    per_call = (time.perf_counter() - t0) / 20
    assert per_call < 0.05
