import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffquot.errors import NotConverged
from diffquot.funcspace import from_id
from diffquot.limits import (
    bbm_limit,
    indicator_anomaly,
    liminf_lowerbound_probe,
    limit_row,
    lp_limit,
    msh_limit,
    plateau,
    predicted_bbm,
    predicted_indicator,
    predicted_lp,
    predicted_msh,
    predicted_sobolev,
    richardson,
    sobolev_limit,
    write_limit_table,
)
from diffquot.measures import DistributionCurve, default_lambda_grid, gamma_zero_threshold


@pytest.fixture(scope="module")
def hat():
    return from_id("hat")


def test_predictions_for_the_hat(hat):
    # ||u'||_1 = 2, ||u||_1 = 1, ||u||_2^2 = 2/3, k(1,1) = 2, sigma_0 = 2
    assert predicted_sobolev(hat, 1.0, 1.0) == pytest.approx(4.0)
    assert predicted_sobolev(hat, -2.0, 1.0) == pytest.approx(2.0)
    assert predicted_lp(hat, 2.0, 2.0) == pytest.approx(4.0 / 3.0)
    assert predicted_bbm(hat, 1.0) == pytest.approx(4.0)
    assert predicted_msh(hat, 1.0) == pytest.approx(4.0)
    assert predicted_indicator(from_id("indicator:0,1"), 2.0) == pytest.approx(4.0 / 3.0)


@given(a=st.floats(-5, 5), b=st.floats(-5, 5), c=st.floats(-5, 5))
def test_richardson_is_exact_on_quadratics(a, b, c):
    x = np.array([0.1, 0.05, 0.025, 0.0125])
    value, gap, table = richardson(x, a + b * x + c * x**2)
    assert value == pytest.approx(a, abs=1e-9)
    assert gap == pytest.approx(0.0, abs=1e-9)
    assert len(table) == x.size


@given(c=st.floats(0.1, 10.0), p=st.floats(0.5, 3.0))
def test_plateau_of_an_exact_power_law(c, p):
    lam = default_lambda_grid(1e-3, 1e3, 8)
    curve = DistributionCurve.from_values(lam, c * lam**-p)
    for direction in ("lambda->inf", "lambda->0+"):
        est = plateau(curve, p, direction)
        assert est.value == pytest.approx(c, rel=1e-9)
        assert est.converged


def test_plateau_gate_rejects_a_drifting_tail():
    lam = default_lambda_grid(1e-3, 1e3, 8)
    curve = DistributionCurve.from_values(lam, lam**-0.5)
    est = plateau(curve, 1.0, "lambda->inf")
    assert not est.converged
    with pytest.raises(NotConverged):
        est.require()


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, -2.0, -3.0])
def test_sobolev_limit_of_the_hat(hat, gamma):
    est = sobolev_limit(hat, gamma, 1.0).require()
    assert est.value == pytest.approx(4.0 / abs(gamma), rel=0.02)
    assert est.target_direction == ("lambda->inf" if gamma > 0 else "lambda->0+")


@pytest.mark.parametrize("gamma", [1.0, 2.0])
def test_indicator_anomaly(gamma):
    est = indicator_anomaly(from_id("indicator:0,1"), gamma).require()
    assert est.value == pytest.approx(4.0 / (gamma + 1.0), rel=0.02)
    assert est.details["ratio_to_w11"] == pytest.approx(gamma / (gamma + 1.0), rel=0.03)


def test_indicator_anomaly_rejects_smooth_members_and_bad_gamma(hat):
    with pytest.raises(ValueError):
        indicator_anomaly(hat, 1.0)
    with pytest.raises(ValueError):
        indicator_anomaly(from_id("indicator:0,1"), -0.5)
    with pytest.raises(ValueError):
        sobolev_limit(hat, 0.0, 1.0)


def test_lp_limit_of_the_hat(hat):
    est = lp_limit(hat, 2.0, 2.0).require()
    assert est.value == pytest.approx(4.0 / 3.0, rel=0.02)


def test_bbm_and_msh_for_the_hat(hat):
    assert bbm_limit(hat, 1.0).value == pytest.approx(4.0, rel=0.02)
    assert msh_limit(hat, 1.0).value == pytest.approx(4.0, rel=0.02)


def test_gamma_zero_threshold_flips_at_the_lipschitz_constant(hat):
    assert gamma_zero_threshold(hat, 0.5)["verdict"] == "diverges"
    assert gamma_zero_threshold(hat, 1.5)["verdict"] == "converges"


def test_liminf_probe_plateau_and_growth(hat):
    rep = liminf_lowerbound_probe(hat, -0.5)
    assert rep["mode"] == "plateau"
    assert rep["plateau"] == pytest.approx(8.0, rel=0.01)
    with pytest.raises(ValueError):
        liminf_lowerbound_probe(hat, 0.5)


def test_limit_table_round_trip(hat, tmp_path):
    est = sobolev_limit(hat, 1.0, 1.0)
    row = limit_row(hat.name, "sobolev", 1.0, 1.0, est, {"n": 1})
    assert row["formula"].startswith("sobolev: ")
    assert math.isclose(row["predicted"], 4.0)
    write_limit_table([row], tmp_path / "t.csv")
    text = (tmp_path / "t.csv").read_text()
    assert text.splitlines()[0].startswith("function,formula")
    assert "converged" in text
