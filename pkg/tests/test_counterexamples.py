import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffquot.counterexamples import (
    InterpolationParams,
    boundary_family_blowup,
    fit_growth,
    growth_table,
    staircase_check,
    write_summary_json,
    write_table_csv,
)

P = InterpolationParams(0.75, 2.0, 0.5)


def test_parameters_of_the_reference_triple():
    assert P.p == pytest.approx(4.0 / 3.0)
    assert P.s == pytest.approx(0.875)
    assert P.gamma0 == pytest.approx(-0.5)
    assert P.alpha == pytest.approx(0.5)
    assert P.eps == pytest.approx(0.25)
    assert P.r_critical == pytest.approx(4.0)
    assert P.regime == "above"
    assert InterpolationParams(0.5, 2.0, 0.5).regime == "boundary"
    assert InterpolationParams(0.25, 2.0, 0.5).regime == "below"


def test_eps_needs_t_above_one_over_q():
    with pytest.raises(ValueError):
        InterpolationParams(0.25, 2.0, 0.5).eps


@pytest.mark.parametrize("kw", [dict(t=0.0, q=2.0, theta=0.5), dict(t=0.5, q=1.0, theta=0.5), dict(t=0.5, q=2.0, theta=1.0)])
def test_parameter_validation(kw):
    with pytest.raises(ValueError):
        InterpolationParams(**kw)


@given(t=st.floats(0.05, 0.95), q=st.floats(1.1, 8.0), theta=st.floats(0.05, 0.95), gamma=st.floats(-3.0, 3.0))
def test_quotient_exponent_is_affine(t, q, theta, gamma):
    # s + gamma/p is the theta-average of t + gamma/q and 1 + gamma
    par = InterpolationParams(t, q, theta)
    assert abs(par.affine_gap(gamma)) < 1e-12
    assert 1.0 / par.p == pytest.approx((1 - theta) / q + theta)


@given(a=st.floats(0.5, 20.0), c=st.floats(0.1, 5.0), beta=st.floats(0.5, 2.0), k=st.sampled_from([1.0, 2.0, 4.0]))
def test_fit_growth_recovers_the_model(a, c, beta, k):
    j = np.arange(0, 11)
    x = (a + c * j.astype(float) ** beta) ** (1.0 / k)
    fit = fit_growth(j, x, k)
    assert fit.exponent == pytest.approx(beta / k, rel=1e-4)
    assert fit.j_used == list(range(2, 11))


def test_fit_growth_needs_three_rows():
    with pytest.raises(ValueError):
        fit_growth([2, 3], [1.0, 2.0], 1.0)


@pytest.mark.filterwarnings("ignore::scipy.optimize.OptimizeWarning")
def test_small_growth_table(tmp_path):
    rows, summ = growth_table(P, 4, 1.0, 2.0)
    assert [r["j"] for r in rows] == [0, 1, 2, 3, 4]
    assert summ["tv_max_deviation"] < 1e-6
    # seminorm^q and the Lorentz quasi-norm^r both grow with j
    assert np.all(np.diff([r["seminorm"] for r in rows]) > 0)
    assert np.all(np.diff([r["lorentz"] for r in rows]) > 0)
    assert summ["seminorm_power_exponent"] == pytest.approx(1.0, abs=0.15)
    write_table_csv(rows, tmp_path / "g.csv")
    write_summary_json(summ, tmp_path / "g.json")
    assert (tmp_path / "g.csv").read_text().startswith("j,")
    assert json.loads((tmp_path / "g.json").read_text())["family"] == "cantor"


def test_growth_table_guards():
    with pytest.raises(ValueError):
        growth_table(InterpolationParams(0.25, 2.0, 0.5), 3)
    with pytest.raises(ValueError):
        growth_table(P, 11)
    with pytest.raises(ValueError):
        growth_table(P, 3, gamma=-0.5)


def test_small_staircase():
    rep = staircase_check(P, 2, 1.0)
    assert rep["holds"] and rep["violations"] == 0
    assert rep["B"] == pytest.approx(0.25**-1.5)
    assert min(a["A_half"] for a in rep["anchors"]) > 0
    assert len(rep["checks"]) == 2


@pytest.mark.filterwarnings("ignore::scipy.optimize.OptimizeWarning")
def test_boundary_family_keeps_total_variation_two():
    rows, summ = boundary_family_blowup(4)
    assert summ["tv_max_deviation"] < 1e-6
    assert summ["t"] == pytest.approx(0.5)
    assert np.all(np.diff([r["seminorm"] for r in rows]) > 0)
    with pytest.raises(ValueError):
        boundary_family_blowup(3, gamma=-0.5)
