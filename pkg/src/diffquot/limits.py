"""Plateau estimates for the limiting formulae, in lambda and in s."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import k_constant, sphere_area
from .errors import NotConverged
from .funcspace import TestFunction
from .measures import (
    DistributionCurve,
    MeasureSpec,
    QuotientSpec,
    SamplingPlan,
    _diameter,
    default_lambda_grid,
    estimate_distribution,
    oracle_distribution_1d,
)
from .norms import fractional_seminorm, weak_norm

__all__ = [
    "LimitEstimate",
    "SLOPE_GATE",
    "plateau",
    "lambda_window",
    "sobolev_limit",
    "indicator_anomaly",
    "lp_limit",
    "bbm_limit",
    "msh_limit",
    "richardson",
    "liminf_lowerbound_probe",
    "predicted_sobolev",
    "predicted_indicator",
    "predicted_lp",
    "predicted_bbm",
    "predicted_msh",
    "limit_row",
    "write_limit_table",
]

SLOPE_GATE = 0.05
PLATEAU_POINTS = 8
DELTA_WINDOW = (1e-6, 1e-3)  # small-h window, in units of the diameter
H_WINDOW = (1e3, 1e6)  # large-h window, in units of the diameter


@dataclass
class LimitEstimate:
    """A limit read off a plateau (or an extrapolation in s).

    ``target_direction`` is one of "lambda->inf", "lambda->0+", "s->1-", "s->0+".
    ``slope_diagnostic`` is the fitted log-log slope of the plateau quantity
    over the points used; ``converged`` requires it to be below the gate.
    """

    target_direction: str
    value: float
    window: tuple[float, float]
    slope_diagnostic: float
    error: float
    converged: bool
    predicted: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "converged" if self.converged else "not-converged"

    @property
    def ratio(self) -> float:
        if self.predicted in (None, 0.0):
            return math.nan
        return self.value / self.predicted

    def require(self) -> "LimitEstimate":
        """Raise :class:`NotConverged` unless the gate passed."""
        if not self.converged:
            raise NotConverged(
                f"no plateau towards {self.target_direction}: slope {self.slope_diagnostic:.3g}, "
                f"window {self.window[0]:.3g}..{self.window[1]:.3g}"
            )
        return self


# ------------------------------------------------------------- predictions
def predicted_sobolev(u: TestFunction, gamma: float, p: float) -> float:
    """k(p, n) / |gamma| * ||grad u||_p^p."""
    if u.is_zero:
        return 0.0
    return k_constant(p, u.dimension) / abs(gamma) * u.grad_lp_norm(p) ** p


def predicted_indicator(u: TestFunction, gamma: float) -> float:
    """k(1, n) / |gamma + 1| * TV(u)."""
    return k_constant(1.0, u.dimension) / abs(gamma + 1.0) * u.total_variation()


def predicted_lp(u: TestFunction, gamma: float, p: float) -> float:
    """2 sigma_{n-1} / |gamma| * ||u||_p^p."""
    if u.is_zero:
        return 0.0
    return 2.0 * sphere_area(u.dimension) / abs(gamma) * u.lp_norm(p) ** p


def predicted_bbm(u: TestFunction, p: float) -> float:
    if u.is_zero:
        return 0.0
    return k_constant(p, u.dimension) / p * u.grad_lp_norm(p) ** p


def predicted_msh(u: TestFunction, p: float) -> float:
    if u.is_zero:
        return 0.0
    return 2.0 * sphere_area(u.dimension) / p * u.lp_norm(p) ** p


# ----------------------------------------------------------------- plateau
def plateau(curve: DistributionCurve, p: float, direction: str, points: int = PLATEAU_POINTS) -> LimitEstimate:
    """Weighted mean of lambda^p mu over the ``points`` grid nodes nearest the limit.

    Weights are inverse squared errors of the curve; the slope diagnostic is
    the least-squares slope of log(lambda^p mu) against log lambda there.
    """
    lam = curve.lambda_grid
    y = lam**p * curve.mu_values
    ey = lam**p * curve.total_error
    idx = np.arange(lam.size)
    sel = idx[-points:] if direction == "lambda->inf" else idx[:points]
    ls, ys, es = lam[sel], y[sel], ey[sel]
    window = (float(ls.min()), float(ls.max()))
    if np.all(ys == 0):
        return LimitEstimate(direction, 0.0, window, 0.0, float(es.max(initial=0.0)), True)
    if np.any(ys <= 0):
        return LimitEstimate(direction, float(np.mean(ys)), window, math.inf, math.inf, False)
    slope = float(np.polyfit(np.log(ls), np.log(ys), 1)[0])
    floor = 1e-12 * float(np.max(np.abs(ys)))
    w = 1.0 / np.maximum(es, floor) ** 2
    value = float(np.sum(w * ys) / np.sum(w))
    stat = float(1.0 / math.sqrt(np.sum(w))) if np.any(es > 0) else 0.0
    spread = float(np.max(np.abs(ys - value)))
    return LimitEstimate(
        direction,
        value,
        window,
        slope,
        stat + spread,
        abs(slope) < SLOPE_GATE,
        details={"values": ys.tolist(), "lambdas": ls.tolist()},
    )


def lambda_window(u: TestFunction, gamma: float, b: float, family: str, per_decade: int = 16) -> np.ndarray:
    """Lambda grid covering the scales that drive the limit.

    Sobolev family: |h| in delta * [1e-6, 1e-3] of the diameter, where
    Q ~ L |h|^(1-b) gives lambda = L delta^(1-b). Indicators use the same
    window with L = 1. L^p family: |h| in [1e3, 1e6] diameters, where
    Q ~ M |h|^(-b).
    """
    D = _diameter(u)
    if family == "lp":
        M = u.sup_bound
        ends = [M * (H * D) ** (-b) for H in H_WINDOW]
    else:
        L = 1.0 if u.is_indicator or not math.isfinite(u.lipschitz) else u.lipschitz
        ends = [L * (d * D) ** (1.0 - b) for d in DELTA_WINDOW]
    lo, hi = min(ends), max(ends)
    return default_lambda_grid(lo, hi, per_decade)


def _curve(u, gamma, b, lambdas, method, plan, grid_resolution) -> DistributionCurve:
    if method == "auto":
        method = "oracle" if u.dimension == 1 and u.poly is not None else "monte-carlo"
    if method == "oracle":
        return oracle_distribution_1d(
            u, MeasureSpec(1, gamma), QuotientSpec(b), lambdas, grid_resolution, strict=False
        )
    if plan is None:
        D = _diameter(u)
        # the smallest relevant |h| sits three decades below the window
        plan = SamplingPlan.for_function(u, r_min=1e-3 * DELTA_WINDOW[0] * D)
    return estimate_distribution(u, MeasureSpec(u.dimension, gamma), QuotientSpec(b), plan, lambdas, "flag")


def _limit(u, gamma, p, b, family, direction, predicted, method, plan, grid_resolution, lambdas):
    if u.is_zero or u.oscillation == 0.0:
        return LimitEstimate(direction, 0.0, (0.0, 0.0), 0.0, 0.0, True, predicted)
    lam = lambda_window(u, gamma, b, family) if lambdas is None else np.asarray(lambdas, float)
    curve = _curve(u, gamma, b, lam, method, plan, grid_resolution)
    est = plateau(curve, p, direction)
    est.predicted = predicted
    est.details.update({"b": b, "gamma": gamma, "p": p, "policy_window": [float(lam[0]), float(lam[-1])]})
    est.details["method"] = curve.method
    est.details["weak_norm"] = weak_norm(curve, p).value
    est.details["curve"] = curve
    return est


def sobolev_limit(
    u: TestFunction,
    gamma: float,
    p: float,
    method: str = "auto",
    plan: SamplingPlan | None = None,
    grid_resolution: int = 32,
    lambdas=None,
) -> LimitEstimate:
    """Plateau of lambda^p nu_gamma(Q_{1 + gamma/p} u > lambda).

    Towards lambda -> inf for gamma > 0 and lambda -> 0+ for gamma < 0.
    """
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    direction = "lambda->inf" if gamma > 0 else "lambda->0+"
    pred = None if u.is_indicator else predicted_sobolev(u, gamma, p)
    return _limit(u, gamma, p, 1.0 + gamma / p, "sobolev", direction, pred, method, plan, grid_resolution, lambdas)


def indicator_anomaly(
    u: TestFunction,
    gamma: float,
    method: str = "auto",
    plan: SamplingPlan | None = None,
    grid_resolution: int = 32,
    lambdas=None,
) -> LimitEstimate:
    """The p = 1 plateau for an indicator, predicted k(1,n) TV / |gamma + 1|.

    ``details["w11_prediction"]`` holds the value k(1,n) TV / |gamma| that a
    W^{1,1} function of the same variation would give.
    """
    if not u.is_indicator:
        raise ValueError("indicator_anomaly needs an indicator corpus member")
    if -1.0 <= gamma <= 0.0:
        raise ValueError("gamma must lie outside [-1, 0]")
    est = sobolev_limit(u, gamma, 1.0, method, plan, grid_resolution, lambdas)
    est.predicted = predicted_indicator(u, gamma)
    w11 = k_constant(1.0, u.dimension) / abs(gamma) * u.total_variation()
    est.details["w11_prediction"] = w11
    est.details["ratio_to_w11"] = est.value / w11
    est.details["expected_ratio_to_w11"] = abs(gamma) / abs(gamma + 1.0)
    return est


def lp_limit(
    u: TestFunction,
    gamma: float,
    p: float,
    method: str = "auto",
    plan: SamplingPlan | None = None,
    grid_resolution: int = 32,
    lambdas=None,
) -> LimitEstimate:
    """Plateau of lambda^p nu_gamma(Q_{gamma/p} u > lambda).

    Towards lambda -> 0+ for gamma > 0 and lambda -> inf for gamma < 0.
    """
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    direction = "lambda->0+" if gamma > 0 else "lambda->inf"
    pred = predicted_lp(u, gamma, p)
    if plan is None and u.dimension > 1:
        D = _diameter(u)
        plan = SamplingPlan.for_function(u, r_max=10.0 * H_WINDOW[1] * D)
    return _limit(u, gamma, p, gamma / p, "lp", direction, pred, method, plan, grid_resolution, lambdas)


# --------------------------------------------------------------- s-limits
def richardson(x, y) -> tuple[float, float, list]:
    """Extrapolate y(x) to x = 0 with Neville's table (error linear in x at leading order).

    Returns the two-step extrapolant from the three points nearest zero,
    the gap to the one from the three farthest points, and the full table.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    order = np.argsort(-x)
    x, y = x[order], y[order]
    table = [y.tolist()]
    cur = y.copy()
    for k in range(1, x.size):
        nxt = (x[k:] * cur[:-1] - x[:-k] * cur[1:]) / (x[k:] - x[:-k])
        table.append(nxt.tolist())
        cur = nxt
    step2 = np.asarray(table[2]) if x.size >= 3 else np.asarray(table[-1])
    value = float(step2[-1])
    gap = float(abs(step2[-1] - step2[0])) if step2.size > 1 else math.nan
    return value, gap, table


def _s_limit(u, p, s_values, weight, direction, predicted, rtol):
    vals, errs = [], []
    for s in s_values:
        r = fractional_seminorm(u, s, p)
        vals.append(weight(s) * r.power)
        errs.append(weight(s) * r.error)
    x = np.array([1.0 - s if direction == "s->1-" else s for s in s_values])
    value, gap, table = richardson(x, vals)
    err = gap + max(errs)
    ok = bool(np.isfinite(value) and gap <= rtol * abs(value))
    slope = float(np.polyfit(np.log(x), np.log(np.abs(vals)), 1)[0]) if all(v > 0 for v in vals) else math.nan
    return LimitEstimate(
        direction,
        value,
        (float(min(s_values)), float(max(s_values))),
        slope,
        err,
        ok,
        predicted,
        {"s": list(s_values), "weighted": vals, "table": table},
    )


def bbm_limit(u: TestFunction, p: float, s_values=(0.9, 0.95, 0.975, 0.99), rtol: float = 0.02) -> LimitEstimate:
    """(1 - s) ||u||_{W^{s,p}}^p extrapolated to s -> 1-."""
    return _s_limit(u, p, s_values, lambda s: 1.0 - s, "s->1-", predicted_bbm(u, p), rtol)


def msh_limit(u: TestFunction, p: float, s_values=(0.1, 0.05, 0.025, 0.01), rtol: float = 0.02) -> LimitEstimate:
    """s ||u||_{W^{s,p}}^p extrapolated to s -> 0+."""
    return _s_limit(u, p, s_values, lambda s: s, "s->0+", predicted_msh(u, p), rtol)


# ---------------------------------------------------------- gamma in [-1,0)
def liminf_lowerbound_probe(u, gamma: float, lambdas=None, grid_resolution: int = 32) -> dict:
    """Behaviour of the p = 1 quotient for gamma in [-1, 0).

    For a single C^1-type member the lambda -> 0+ plateau is compared with
    k(1,n) ||grad u||_1 / |gamma|. For a sequence of members (the Cantor
    family) the weak quasi-norm is reported for each, as growth data.
    """
    if not -1.0 <= gamma < 0.0:
        raise ValueError("gamma must lie in [-1, 0)")
    b = 1.0 + gamma
    if isinstance(u, TestFunction):
        est = sobolev_limit(u, gamma, 1.0, grid_resolution=grid_resolution, lambdas=lambdas)
        return {
            "mode": "plateau",
            "function": u.name,
            "gamma": gamma,
            "plateau": est.value,
            "predicted": est.predicted,
            "error": est.error,
            "verdict": est.verdict,
        }
    rows = []
    for f in u:
        if f.is_zero:
            rows.append({"function": f.name, "weak_norm": 0.0, "argmax": None})
            continue
        lam = default_lambda_grid(1e-8, 1e4, 8) if lambdas is None else lambdas
        c = oracle_distribution_1d(f, MeasureSpec(1, gamma), QuotientSpec(b), lam, grid_resolution, strict=False)
        wn = weak_norm(c, 1.0)
        rows.append({"function": f.name, "weak_norm": wn.value, "argmax": wn.details.get("argmax"), "flag": wn.verdict})
    vals = [r["weak_norm"] for r in rows]
    return {
        "mode": "growth",
        "gamma": gamma,
        "rows": rows,
        "increasing": bool(np.all(np.diff(vals) > 0)),
    }


# ------------------------------------------------------------------ tables
LIMIT_COLUMNS = (
    "function",
    "formula",
    "gamma",
    "p",
    "direction",
    "plateau",
    "error",
    "predicted",
    "ratio",
    "slope",
    "verdict",
    "constants",
)

FORMULAS = {
    "sobolev": "k(p,n)/|gamma| * ||grad u||_p^p",
    "indicator": "k(1,n)/|gamma+1| * TV(u)",
    "lp": "2 sigma_{n-1}/|gamma| * ||u||_p^p",
    "bbm": "k(p,n)/p * ||grad u||_p^p",
    "msh": "2 sigma_{n-1}/p * ||u||_p^p",
}


def limit_row(function: str, formula: str, gamma, p, est: LimitEstimate, constants: dict | None = None) -> dict:
    """One long-format row; ``formula`` is a key of :data:`FORMULAS`."""
    cons = "" if constants is None else ";".join(f"{k}={v!r}" for k, v in constants.items())
    return {
        "function": function,
        "formula": f"{formula}: {FORMULAS[formula]}",
        "gamma": gamma,
        "p": p,
        "direction": est.target_direction,
        "plateau": est.value,
        "error": est.error,
        "predicted": est.predicted,
        "ratio": est.ratio,
        "slope": est.slope_diagnostic,
        "verdict": est.verdict,
        "constants": cons,
    }


def write_limit_table(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=LIMIT_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
