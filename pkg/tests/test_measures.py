import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffquot.errors import ResolutionFailure
from diffquot.funcspace import (
    make_cantor_g,
    make_hat,
    make_indicator_interval,
    make_smooth_bump,
    rescale,
    scale_values,
)
from diffquot.measures import (
    MeasureSpec,
    QuotientSpec,
    SamplingPlan,
    default_lambda_grid,
    diff_quotient,
    estimate_distribution,
    function_distribution,
    gamma_zero_threshold,
    oracle_distribution_1d,
    ramp_survival,
)


def indicator_mu(lam, gamma, b):
    """nu_gamma{Q_b 1_[0,1] > lam}, derived by hand: the x-section has length 2 min(|h|, 1)."""
    lam = np.asarray(lam, float)
    if b > 0 and gamma > -1:
        H = lam ** (-1.0 / b)
        small = 4 * H ** (gamma + 1) / (gamma + 1)
        big = 4 / (gamma + 1) + 4 * (H**gamma - 1) / gamma
        return np.where(H <= 1, small, big)
    if b < 0 and gamma < -1:
        # Q = |h|^{-b} > lam  <=>  |h| > lam^{-1/b}
        H = lam ** (-1.0 / b)
        big = 4 * H**gamma / abs(gamma)
        small = 4 * (1 - H ** (gamma + 1)) / (gamma + 1) + 4 / abs(gamma)
        return np.where(H >= 1, big, small)
    raise ValueError


def oracle(u, gamma, b, lam, **kw):
    return oracle_distribution_1d(u, MeasureSpec(1, gamma), QuotientSpec(b), np.asarray(lam, float), **kw)


@pytest.mark.parametrize("gamma, b", [(1.0, 2.0), (2.0, 1.5), (0.5, 1.0), (-2.0, -1.0), (-3.0, -2.0)])
def test_indicator_closed_form(gamma, b):
    lam = default_lambda_grid(1e-2, 1e2, 4)
    c = oracle(make_indicator_interval(0, 1), gamma, b, lam, strict=False)
    want = indicator_mu(lam, gamma, b)
    assert np.all(np.abs(c.mu_values - want) <= 1e-6 * want + c.total_error)
    assert np.allclose(c.mu_values, want, rtol=1e-6)


@pytest.mark.parametrize("lam", [5.0, 8.0, 20.0, 100.0])
def test_hat_exact_identity_at_gamma_minus_one(lam):
    c = oracle(make_hat(), -1.0, -1.0, [lam])
    assert lam * c.mu_values[0] == pytest.approx(4.0, rel=1e-9)


def test_bump_against_brute_force_quadrature():
    # brute-force double integral on the exact (non-surrogate) bump:
    # 400001 x-nodes, 4000 log-spaced h-nodes, far field separately
    ref = {0.0411: 201.3056, 0.13: 65.6428, 0.3083: 26.5883}
    c = oracle(make_smooth_bump(), -0.5, 0.5, list(ref), strict=False)
    for v, (lam, r) in zip(c.mu_values, ref.items()):
        assert v == pytest.approx(r, rel=2e-3), lam


def test_oracle_does_not_depend_on_the_partition():
    g = make_cantor_g(0)
    from diffquot.funcspace import _from_poly

    fine = _from_poly("g0-refined", g.poly.refine(np.linspace(0, 1, 257)), "smooth-compact")
    lam = np.array([0.05, 0.13, 0.5, 1.0])
    a = oracle(g, -0.5, 0.5, lam, strict=False)
    b = oracle(fine, -0.5, 0.5, lam, strict=False)
    tol = 3 * (a.total_error + b.total_error) + 1e-3 * a.mu_values
    assert np.all(np.abs(a.mu_values - b.mu_values) <= tol)


@given(t=st.floats(0.3, 3.0), lam=st.floats(0.05, 20.0))
def test_dilation_law(t, lam):
    # u_t(x) = u(x / t):  mu_{u_t}(lam) = t^{gamma+1} mu_u(lam t^b)
    gamma, b = 1.0, 2.0
    u = make_hat()
    ut = rescale(u, 1.0 / t)
    lhs = oracle(ut, gamma, b, [lam], strict=False)
    rhs = oracle(u, gamma, b, [lam * t**b], strict=False)
    assert lhs.mu_values[0] == pytest.approx(t ** (gamma + 1) * rhs.mu_values[0], rel=1e-6)


@given(c=st.floats(0.2, 5.0), lam=st.floats(0.05, 20.0))
def test_value_scaling_law(c, lam):
    u = make_hat()
    lhs = oracle(scale_values(u, c), -2.0, -2.0, [lam], strict=False)
    rhs = oracle(u, -2.0, -2.0, [lam / c], strict=False)
    assert lhs.mu_values[0] == pytest.approx(rhs.mu_values[0], rel=1e-9)


def test_survival_is_nonincreasing():
    c = oracle(make_cantor_g(2), 1.0, 1.75, default_lambda_grid(1e-2, 1e3, 8), strict=False)
    assert np.all(np.diff(c.mu_values) <= 1e-9 * c.mu_values[:-1])


@given(
    lo=st.floats(0.0, 5.0),
    width=st.floats(0.0, 5.0),
    m=st.floats(0.01, 10.0),
    lam=st.floats(0.0, 12.0),
)
def test_ramp_survival_single_record(lo, width, m, lam):
    hi = lo + width
    got = ramp_survival(np.array([lo]), np.array([hi]), np.array([m]), np.array([lam]))[0]
    if width == 0:
        want = m if lam < lo else 0.0
    else:
        want = m * min(max((hi - lam) / width, 0.0), 1.0)
    assert got == pytest.approx(want, abs=1e-12)


def test_diff_quotient_direct():
    u = make_hat()
    x = np.array([0.0, -0.5])
    h = np.array([0.5, 0.25])
    q = diff_quotient(u, x, h, 1.0)
    assert q == pytest.approx([1.0, 1.0])


def test_monte_carlo_agrees_with_oracle():
    u = make_indicator_interval(0, 1)
    lam = default_lambda_grid(0.013, 130, 4)
    o = oracle(u, 1.0, 2.0, lam)
    plan = SamplingPlan.for_function(u, samples_per_shell=4000, seed=3)
    mc = estimate_distribution(u, MeasureSpec(1, 1.0), QuotientSpec(2.0), plan, lam, "flag")
    bound = 4 * mc.stderr + o.total_error + mc.truncation_bound
    assert np.all(np.abs(mc.mu_values - o.mu_values) <= bound)


def test_monte_carlo_is_reproducible():
    u = make_hat()
    lam = default_lambda_grid(0.1, 10, 2)
    plan = SamplingPlan.for_function(u, samples_per_shell=2000, seed=11)
    a = estimate_distribution(u, MeasureSpec(1, 1.0), QuotientSpec(2.0), plan, lam, "flag")
    b = estimate_distribution(u, MeasureSpec(1, 1.0), QuotientSpec(2.0), plan, lam, "flag")
    assert np.array_equal(a.mu_values, b.mu_values)


def test_function_distribution_of_hat():
    lam = np.array([1e-9, 0.25, 0.5, 0.99])
    c = function_distribution(make_hat(), lam)
    assert c.mu_values == pytest.approx(2 * (1 - lam), rel=1e-12)


@pytest.mark.parametrize("lam, verdict", [(0.5, "diverges"), (1.5, "converges")])
def test_gamma_zero_threshold(lam, verdict):
    assert gamma_zero_threshold(make_hat(), lam)["verdict"] == verdict


def test_strict_oracle_signals_resolution_failure_or_succeeds():
    # a coarse grid either resolves the curve or says so
    u = make_cantor_g(3)
    try:
        c = oracle(u, 0.5, 1.5, default_lambda_grid(1e-1, 1e2, 2), grid_resolution=4)
    except ResolutionFailure:
        return
    assert c.meta["resolution_ok"]


def test_measure_spec_validation():
    with pytest.raises(ValueError):
        MeasureSpec(0, 1.0)
    assert math.isclose(float(MeasureSpec(1, 1.0).weight(np.array([2.0]))[0]), 1.0)
