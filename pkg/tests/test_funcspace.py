import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from diffquot.funcspace import (
    cut_off,
    from_id,
    into_unit_interval,
    lift_to_dim,
    make_boundary_g,
    make_cantor_g,
    make_disc_indicator,
    make_hat,
    make_indicator_interval,
    make_smooth_bump,
    make_zero,
    rescale,
    scale_values,
)


def quad_norm(u, p, a, b, points=()):
    return quad(lambda t: abs(float(u(np.array([t]))[0])) ** p, a, b, points=list(points), limit=400)[0] ** (1 / p)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_hat_norms(p):
    u = make_hat()
    assert u.lp_norm(p) == pytest.approx((2 / (p + 1)) ** (1 / p), rel=1e-12)
    assert u.grad_lp_norm(p) == pytest.approx(2 ** (1 / p), rel=1e-12)
    assert u.total_variation() == pytest.approx(2.0)


def test_indicator_and_disc():
    u = make_indicator_interval(0.0, 1.0)
    assert u.total_variation() == 2.0
    assert u.lp_norm(3.0) == pytest.approx(1.0)
    assert math.isinf(u.grad_lp_norm(1.0))
    d = make_disc_indicator(0.5)
    assert d.total_variation() == pytest.approx(math.pi)
    assert d.lp_norm(2.0) == pytest.approx(math.sqrt(math.pi / 4))


def test_bump_surrogate_is_accurate():
    u = make_smooth_bump()
    x = np.linspace(-1, 1, 4001)
    assert np.max(np.abs(u.poly(x) - u(x))) < 1e-9
    ref = quad_norm(u, 1.0, -1, 1, points=[0.0])
    assert u.lp_norm(1.0) == pytest.approx(ref, rel=1e-8)
    assert u.total_variation() == pytest.approx(2.0, rel=1e-9)


def test_zero_member():
    z = make_zero()
    assert z.is_zero and z.lp_norm(2.0) == 0.0 and z.total_variation() == 0.0


@pytest.mark.parametrize("j", [0, 1, 3, 5])
def test_cantor_is_monotone_with_unit_variation(j):
    g = make_cantor_g(j)
    x = np.linspace(-0.5, 1.5, 20001)
    v = g(x)
    assert np.all(np.diff(v) >= -1e-12)
    assert v[0] == 0.0 and v[-1] == 1.0
    assert g.poly.total_variation() == pytest.approx(1.0, abs=1e-12)
    assert g.constant_at_infinity


@given(j=st.integers(1, 5), x=st.floats(0.0, 1.0))
def test_cantor_self_similarity(j, x):
    eps = 0.25
    g, h = make_cantor_g(j, eps), make_cantor_g(j - 1, eps)
    lhs = g(np.array([x]))[0]
    rhs = 0.5 * (h(np.array([x / eps]))[0] + h(np.array([1 - (1 - x) / eps]))[0])
    assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("j", [0, 2, 4])
def test_boundary_family(j):
    g = make_boundary_g(j)
    assert g.total_variation() == 2.0
    assert g.poly.total_variation() == pytest.approx(2.0, abs=1e-12)
    assert g(np.array([1.0]))[0] == pytest.approx(1.0)


def test_cut_off_keeps_plateau_and_adds_descent():
    g = make_cantor_g(3)
    c = cut_off(g)
    x = np.linspace(-0.5, 1.5, 401)
    assert np.allclose(c(x), g(x))
    assert c.total_variation() == pytest.approx(2.0)
    assert c.poly.total_variation() == pytest.approx(2.0, abs=1e-12)
    assert not c.constant_at_infinity


@given(t=st.floats(0.1, 10.0), p=st.sampled_from([1.0, 2.0, 3.0]))
def test_rescale_norm_scaling(t, p):
    u = make_hat()
    v = rescale(u, t)
    assert v.lp_norm(p) == pytest.approx(t ** (-1 / p) * u.lp_norm(p), rel=1e-10)
    # against the function itself, not the carried formula
    assert v.poly.lp_norm_p(p) ** (1 / p) == pytest.approx(v.lp_norm(p), rel=1e-10)
    assert v.total_variation() == pytest.approx(2.0)


@given(c=st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_scale_values(c):
    v = scale_values(make_hat(), c)
    assert v(np.array([0.0]))[0] == pytest.approx(c)
    assert v.total_variation() == pytest.approx(2 * abs(c))


def test_into_unit_interval_moves_support():
    v = into_unit_interval(make_hat(), 0.2, 0.8)
    assert v(np.array([0.5]))[0] == pytest.approx(1.0)
    assert v(np.array([0.19, 0.81])) == pytest.approx([0.0, 0.0])
    assert v.total_variation() == pytest.approx(2.0)


def test_lift_is_two_dimensional_and_matches_on_plateau():
    g = make_cantor_g(2)
    u = lift_to_dim(g)
    pts = np.array([[0.1, 0.3], [0.9, 1.2], [0.5, -0.2]])
    assert u.dimension == 2
    assert np.allclose(u(pts), g(pts[:, 0]))


@pytest.mark.parametrize(
    "spec",
    ["hat", "bump", "indicator:0,1", "disc", "cantor:j=3", "boundary:j=2", "lift(hat)", "cut(cantor:j=2)", "unit(hat)", "zero"],
)
def test_from_id_builds_members(spec):
    u = from_id(spec)
    assert u.dimension in (1, 2)
    assert np.isfinite(u.total_variation())


def test_from_id_rejects_unknown():
    with pytest.raises(ValueError):
        from_id("nosuchthing")
