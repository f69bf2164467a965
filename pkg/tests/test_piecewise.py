import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from diffquot.piecewise import PiecewisePoly1D, gauss_legendre01


def random_poly(seed, pieces=4, degree=3):
    rng = np.random.default_rng(seed)
    breaks = np.sort(rng.uniform(-2, 2, pieces + 1))
    coefs = rng.normal(size=(pieces, degree + 1))
    return PiecewisePoly1D(breaks, coefs, 0.0, 0.0)


def test_gauss_legendre_integrates_polynomials():
    x, w = gauss_legendre01(4)
    for k in range(8):
        assert np.dot(w, x**k) == pytest.approx(1.0 / (k + 1), rel=1e-13)


@given(seed=st.integers(0, 10_000))
def test_integrate_matches_scipy(seed):
    f = random_poly(seed)
    a, b = f.span
    ref = quad(lambda t: float(f(np.array([t]))[0]), a - 0.5, b + 0.5, points=list(f.breaks), limit=200)[0]
    assert f.integrate(a - 0.5, b + 0.5) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@given(seed=st.integers(0, 10_000), extra=st.lists(st.floats(-3, 3), min_size=1, max_size=6))
def test_refine_leaves_function_unchanged(seed, extra):
    f = random_poly(seed)
    g = f.refine(np.array(extra))
    x = np.linspace(-3, 3, 301)
    assert np.allclose(f(x), g(x), atol=1e-10)
    assert g.total_variation() == pytest.approx(f.total_variation(), rel=1e-10)


def test_hat_total_variation_and_norms():
    hat = PiecewisePoly1D.linear_interp([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
    assert hat.total_variation() == pytest.approx(2.0)
    assert hat.lp_norm_p(2.0) == pytest.approx(2.0 / 3.0)
    assert hat.sup_abs() == 1.0


def test_jumps_count_in_total_variation():
    step = PiecewisePoly1D.constant_pieces([0.0, 1.0, 2.0], [1.0, -2.0])
    # 0 -> 1 -> -2 -> 0
    assert step.total_variation() == pytest.approx(1 + 3 + 2)


@given(seed=st.integers(0, 10_000), h=st.floats(0.01, 3.0))
def test_increments_integrate_to_zero(seed, h):
    # int (f(x + h) - f(x)) dx = 0 for compactly supported f; Simpson is exact
    # on each merged cell for quadratic pieces
    f = random_poly(seed, degree=2)
    tab = f.increments(h, np.array([0.0, 0.5, 1.0]))
    v = tab.values
    total = np.sum(tab.lengths * (v[:, 0] + 4 * v[:, 1] + v[:, 2]) / 6)
    scale = np.sum(tab.lengths * np.abs(v).max(axis=1)) + 1e-12
    assert abs(total) <= 1e-10 * scale


@given(seed=st.integers(0, 10_000), h=st.floats(0.01, 3.0))
def test_increment_power_two_matches_quadrature(seed, h):
    f = random_poly(seed, degree=1)
    tab = f.increments(h, np.array([0.0, 1.0]))
    a, c = tab.values[:, 0], tab.values[:, 1]
    exact = np.sum(tab.lengths * (a * a + a * c + c * c) / 3)
    lo, hi = f.span
    ref = quad(lambda t: float((f(np.array([t + h])) - f(np.array([t])))[0] ** 2), lo - h - 1, hi + 1,
               points=sorted(set(f.breaks) | set(f.breaks - h)), limit=400)[0]
    assert exact == pytest.approx(ref, rel=1e-8, abs=1e-12)
