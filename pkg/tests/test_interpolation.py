import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffquot.counterexamples import InterpolationParams
from diffquot.funcspace import from_id, rescale
from diffquot.interpolation import (
    gn_inequality_check,
    holder_constant,
    lorentz_holder_bound,
    lorentz_interpolation_check,
    pointwise_factorization_error,
)
from diffquot.measures import DistributionCurve, default_lambda_grid


def test_holder_constant_reference_value():
    # p = 4/3, theta = 1/2: 2^(3/4) * 4^(1/2)
    assert holder_constant(4.0 / 3.0, 0.5) == pytest.approx(2.0**0.75 * 2.0)
    with pytest.raises(ValueError):
        holder_constant(1.0, 0.5)


def _step_curve(levels, masses):
    """Survival curve of a simple function taking value levels[i] on a set of measure masses[i]."""
    lv = np.asarray(levels, float)
    ms = np.asarray(masses, float)
    edges = np.concatenate([lv * (1 - 1e-9), lv * (1 + 1e-9)])
    lam = np.union1d(default_lambda_grid(lv.min() * 1e-6, lv.max() * 0.999, 32), edges)
    mu = np.array([ms[lv > x].sum() for x in lam])
    return DistributionCurve.from_values(lam, mu)


@given(
    levels=st.lists(st.floats(0.1, 10.0), min_size=1, max_size=4, unique=True),
    masses=st.lists(st.floats(0.05, 5.0), min_size=4, max_size=4),
    q=st.floats(1.5, 4.0),
    theta=st.floats(0.1, 0.9),
)
def test_lorentz_holder_split_on_simple_functions(levels, masses, q, theta):
    p = 1.0 / ((1 - theta) / q + theta)
    curve = _step_curve(levels, masses[: len(levels)])
    lhs, rhs = lorentz_holder_bound(curve, p, q, theta)
    assert 0 < lhs <= rhs * (1 + 1e-6)


def test_lorentz_holder_bound_checks_the_exponents():
    curve = _step_curve([1.0], [1.0])
    with pytest.raises(ValueError):
        lorentz_holder_bound(curve, 2.0, 2.0, 0.5)


@pytest.mark.parametrize("fid", ["hat", "cantor:j=3", "indicator:0,1"])
@pytest.mark.parametrize("gamma", [1.0, -2.0])
def test_pointwise_factorization_is_exact(fid, gamma):
    err = pointwise_factorization_error(from_id(fid), InterpolationParams(0.75, 2.0, 0.5), gamma)
    assert err < 1e-12


def test_gn_chain_reproduces_the_seminorms():
    rep = gn_inequality_check(from_id("cut(cantor:j=2)"), 0.25, 2.0, 0.5)
    ch = rep["chain"]
    assert ch["F_Lp"] == pytest.approx(rep["seminorm_sp"], rel=5e-3)
    assert ch["F_Lq"] == pytest.approx(rep["seminorm_tq"], rel=5e-3)
    assert ch["holder_lhs"] <= ch["holder_rhs"]
    assert math.isfinite(rep["ratio"]) and rep["ratio"] > 0


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_gn_ratio_is_dilation_invariant(t):
    # both sides carry the same power of the dilation when 1/p - s = (1 - theta)(1/q - t)
    u = from_id("cut(cantor:j=2)")
    base = gn_inequality_check(u, 0.25, 2.0, 0.5)["ratio"]
    assert gn_inequality_check(rescale(u, t), 0.25, 2.0, 0.5)["ratio"] == pytest.approx(base, rel=1e-2)


def test_gn_needs_t_below_one_over_q():
    with pytest.raises(ValueError):
        gn_inequality_check(from_id("hat"), 0.75, 2.0, 0.5)


def test_lorentz_interpolation_report():
    rep = lorentz_interpolation_check(from_id("cantor:j=2"), 0.75, 2.0, 0.5, 1.0)
    assert rep["r"] == pytest.approx(4.0)
    assert rep["factorization_rel_error"] < 1e-12
    assert rep["tv"] == pytest.approx(1.0)
    assert 0 < rep["constant"] < 10
    with pytest.raises(ValueError):
        lorentz_interpolation_check(from_id("hat"), 0.75, 2.0, 0.5, -0.5)
    with pytest.raises(ValueError):
        lorentz_interpolation_check(from_id("hat"), 0.25, 2.0, 0.5, 1.0)
