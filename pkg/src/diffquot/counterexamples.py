"""Growth of the Cantor-type and boundary families that break interpolation at small r.

For t > 1/q the Cantor approximants g_j keep total variation 1 while
||g_j||_{W^{t,q}}^q and [Q_{s+gamma/p} g_j]_{L^{p,r}}^r both grow linearly in
j. At t = 1/q the two-sided ramps g_0(2^j x) g_0(2^j (2 - x)) play that role.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .funcspace import make_boundary_g, make_cantor_g
from .measures import MeasureSpec, QuotientSpec, default_lambda_grid, oracle_distribution_1d, restricted_measure_1d
from .norms import LorentzSpec, fractional_seminorm, lorentz_norm

__all__ = [
    "InterpolationParams",
    "GrowthFit",
    "fit_growth",
    "growth_table",
    "staircase_check",
    "boundary_family_blowup",
    "write_table_csv",
    "write_summary_json",
]

# the tail extrapolation may carry at most this share of a Lorentz integral
ENDPOINT_SHARE = 0.01
# relative change of a fitted tail slope between one and half a decade
SLOPE_DRIFT = 0.02
GROWTH_GRID = (1e-4, 1e8, 8)


@dataclass(frozen=True)
class InterpolationParams:
    """(1/p, s) = (1 - theta)(1/q, t) + theta (1, 1), and the critical gamma0."""

    t: float
    q: float
    theta: float

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise ValueError("t must lie in (0, 1)")
        if not 1.0 < self.q < math.inf:
            raise ValueError("q must lie in (1, inf)")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")

    @property
    def p(self) -> float:
        return 1.0 / ((1.0 - self.theta) / self.q + self.theta)

    @property
    def s(self) -> float:
        return (1.0 - self.theta) * self.t + self.theta

    @property
    def gamma0(self) -> float:
        return -(1.0 - self.t) / (1.0 - 1.0 / self.q)

    @property
    def alpha(self) -> float:
        return 1.0 + self.gamma0

    @property
    def eps(self) -> float:
        if self.alpha <= 0:
            raise ValueError("eps = 2^(-1/alpha) needs alpha > 0, i.e. t > 1/q")
        return 2.0 ** (-1.0 / self.alpha)

    @property
    def r_critical(self) -> float:
        return self.q / (1.0 - self.theta)

    @property
    def regime(self) -> str:
        d = self.t - 1.0 / self.q
        if abs(d) < 1e-14:
            return "boundary"
        return "above" if d > 0 else "below"

    def b(self, gamma: float) -> float:
        """Quotient exponent s + gamma/p."""
        return self.s + gamma / self.p

    def affine_gap(self, gamma: float) -> float:
        """s + gamma/p - ((1 - theta)(t + gamma/q) + theta (1 + gamma)); zero up to rounding."""
        th = self.theta
        return self.b(gamma) - ((1.0 - th) * (self.t + gamma / self.q) + th * (1.0 + gamma))

    def B(self, gamma: float) -> float:
        """Staircase ratio eps^-(gamma - gamma0)."""
        return self.eps ** (-(gamma - self.gamma0))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(p=self.p, s=self.s, gamma0=self.gamma0, alpha=self.alpha, r_critical=self.r_critical)
        if self.alpha > 0:
            d["eps"] = self.eps
        return d


@dataclass
class GrowthFit:
    """Exponent beta/k from X_j^k = a + c j^beta, plus the raw log-log slope of X_j."""

    exponent: float
    error: float
    power: float
    offset: float
    scale: float
    loglog_slope: float
    j_used: list = field(default_factory=list)


def fit_growth(j, values, power: float, j_min: int = 2) -> GrowthFit:
    """Growth exponent of ``values`` in j, fitted over j >= j_min.

    The quantities studied grow like a + c j in the k-th power with an O(1)
    offset a that dominates at moderate j, so a plain log-log slope of X_j
    badly underestimates the rate. The model X_j^k = a + c j^beta is fitted
    by least squares and beta/k is reported.
    """
    j = np.asarray(j, float)
    x = np.asarray(values, float)
    keep = (j >= j_min) & np.isfinite(x) & (x > 0)
    j, x = j[keep], x[keep]
    if j.size < 3:
        raise ValueError("need at least three rows with j >= j_min")
    slope = float(np.polyfit(np.log(j), np.log(x), 1)[0])
    y = x**power

    def model(jj, a, c, beta):
        return a + c * jj**beta

    c0 = max((y[-1] - y[0]) / (j[-1] - j[0]), 1e-12)
    try:
        (a, c, beta), cov = curve_fit(model, j, y, p0=(y[0] - c0 * j[0], c0, 1.0), maxfev=20000)
        err = float(math.sqrt(max(cov[2, 2], 0.0))) if np.all(np.isfinite(cov)) else math.inf
    except RuntimeError:
        a, c, beta, err = math.nan, math.nan, math.nan, math.inf
    return GrowthFit(float(beta) / power, err / power, power, float(a), float(c), slope, j.astype(int).tolist())


def _lorentz_row(u, gamma: float, b: float, p: float, r: float, lambdas) -> dict:
    curve = oracle_distribution_1d(u, MeasureSpec(1, gamma), QuotientSpec(b), lambdas, strict=False)
    nv = lorentz_norm(curve, LorentzSpec(p, r))
    info = nv.details
    limited = nv.verdict != "finite"
    if not limited and (info.get("integral") or 0.0) > 0:
        # a tail carrying a real share must be a stable power law
        other = lorentz_norm(curve, LorentzSpec(p, r), tail_decades=0.5).details
        for side in ("lower", "upper"):
            share = (info.get(f"{side}_tail") or 0.0) / info["integral"]
            a1, a2 = info.get(f"{side}_slope"), other.get(f"{side}_slope")
            if share > ENDPOINT_SHARE and (a1 is None or a2 is None or abs(a1 - a2) > SLOPE_DRIFT * abs(a1)):
                limited = True
    return {
        "lorentz": float(nv.value),
        "lorentz_error": float(nv.error),
        "lorentz_verdict": nv.verdict,
        "endpoint_limited": bool(limited),
        "resolution_ok": bool(curve.meta.get("resolution_ok", True)),
    }


def _rows(make, js, t, q, gamma, b, p, r, lambdas, threads):
    def one(j):
        u = make(j)
        sv = fractional_seminorm(u, t, q)
        row = {"j": j, "function": u.name, "tv": u.total_variation()}
        row.update(seminorm=sv.value, seminorm_power=sv.power, seminorm_error=sv.error)
        row.update(_lorentz_row(u, gamma, b, p, r, lambdas))
        return row

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, js))
    else:
        rows = [one(j) for j in js]
    # log-increments between consecutive rows
    for prev, row in zip([None] + rows[:-1], rows):
        for key in ("seminorm", "lorentz"):
            ok = prev is not None and prev[key] > 0 and row[key] > 0 and math.isfinite(row[key])
            row[f"dlog_{key}"] = math.log(row[key] / prev[key]) if ok else math.nan
    return rows


def _summary(rows, q, r, predicted, extra) -> dict:
    js = [row["j"] for row in rows]
    semi = fit_growth(js, [row["seminorm"] for row in rows], q)
    lor = fit_growth(js, [row["lorentz"] for row in rows], r)
    return {
        **extra,
        "seminorm_power_exponent": semi.exponent * q,
        "seminorm_power_exponent_error": semi.error * q,
        "seminorm_exponent": semi.exponent,
        "lorentz_exponent": lor.exponent,
        "lorentz_exponent_error": lor.error,
        "predicted": predicted,
        "fits": {"seminorm": asdict(semi), "lorentz": asdict(lor)},
        "endpoint_limited_rows": [row["j"] for row in rows if row["endpoint_limited"]],
        "tv_max_deviation": max(abs(row["tv"] - extra["tv_expected"]) for row in rows),
    }


def growth_table(
    params: InterpolationParams,
    j_max: int = 8,
    gamma: float = 1.0,
    r: float = 2.0,
    *,
    j_min: int = 0,
    lambdas=None,
    threads: int = 1,
) -> tuple[list[dict], dict]:
    """Rows (j, TV, seminorm, Lorentz quasi-norm, log-increments) for the Cantor family.

    Returns the rows and a summary with growth exponents fitted over j >= 2.
    """
    if params.regime == "below":
        raise ValueError("the Cantor family needs t > 1/q")
    if params.regime == "boundary":
        raise ValueError("use boundary_family_blowup at t = 1/q")
    if j_max > 10:
        raise ValueError("j_max is capped at 10")
    if abs(gamma - params.gamma0) < 1e-12:
        raise ValueError("gamma must differ from gamma0")
    lam = default_lambda_grid(*GROWTH_GRID) if lambdas is None else lambdas
    b = params.b(gamma)
    eps = params.eps
    rows = _rows(lambda j: make_cantor_g(j, eps), range(j_min, j_max + 1), params.t, params.q, gamma, b, params.p, r, lam, threads)
    extra = {
        "family": "cantor",
        "params": params.to_dict(),
        "gamma": gamma,
        "b": b,
        "r": r,
        "tv_expected": 1.0,
    }
    predicted = {"seminorm_power_exponent": 1.0, "lorentz_exponent": 1.0 / r}
    return rows, _summary(rows, params.q, r, predicted, extra)


def boundary_family_blowup(
    j_max: int = 8,
    gamma: float = 1.0,
    p: float = 2.0,
    r: float = 2.0,
    *,
    q: float = 2.0,
    j_min: int = 0,
    lambdas=None,
    threads: int = 1,
) -> tuple[list[dict], dict]:
    """Rows for g_j = g_0(2^j x) g_0(2^j (2 - x)) with the quotient exponent (1 + gamma)/p.

    The seminorm column uses t = 1/q.
    """
    if -1.0 <= gamma <= 0.0:
        raise ValueError("gamma must lie outside [-1, 0]")
    if j_max > 10:
        raise ValueError("j_max is capped at 10")
    lam = default_lambda_grid(*GROWTH_GRID) if lambdas is None else lambdas
    b = (1.0 + gamma) / p
    rows = _rows(make_boundary_g, range(j_min, j_max + 1), 1.0 / q, q, gamma, b, p, r, lam, threads)
    extra = {"family": "boundary", "gamma": gamma, "b": b, "p": p, "q": q, "t": 1.0 / q, "r": r, "tv_expected": 2.0}
    predicted = {"seminorm_power_exponent": 1.0, "lorentz_exponent": 1.0 / r}
    return rows, _summary(rows, q, r, predicted, extra)


def staircase_check(
    params: InterpolationParams,
    j: int,
    gamma: float,
    lambdas=None,
    *,
    grid_resolution: int = 32,
    strict: bool = True,
) -> dict:
    """Check A_{j,lam} >= B^-l A_{j-l, lam B^(-l/p)} for l = 1..j on the unit window.

    A_{j,lam} is the nu_gamma-mass of {Q_{s+gamma/p} g_j > lam} over
    x, x + h in [0, 1], 0 < h <= 1. Each comparison allows the oracle
    refinement error of both sides. The report also records the anchor
    values A_{j-l,1/2} and the resulting floor B^-l A_{j-l,1/2} for
    lam <= B^(l/p)/2.
    """
    if j < 1:
        raise ValueError("j must be at least 1")
    b = params.b(gamma)
    B = params.B(gamma)
    p = params.p
    eps = params.eps
    lam = np.logspace(-2, 4, 25) if lambdas is None else np.sort(np.asarray(lambdas, float))

    cache = {}

    def A(jj, grid):
        grid = np.asarray(grid, float)
        key = (jj, tuple(grid))
        if key not in cache:
            order = np.argsort(grid)
            c = restricted_measure_1d(make_cantor_g(jj, eps), grid[order], gamma, b, (0.0, 1.0), 1.0, grid_resolution)
            mu = np.empty_like(grid)
            err = np.empty_like(grid)
            mu[order] = c.mu_values
            err[order] = c.total_error
            cache[key] = (mu, err)
        return cache[key]

    lhs, lhs_err = A(j, lam)
    checks = []
    violations = 0
    for ell in range(1, j + 1):
        shifted = lam * B ** (-ell / p)
        rhs, rhs_err = A(j - ell, shifted)
        rhs = B**-ell * rhs
        slack = lhs_err + B**-ell * rhs_err + 1e-12 * max(float(np.max(lhs)), 1e-300)
        ok = lhs >= rhs - slack
        violations += int(np.sum(~ok))
        checks.append(
            {
                "ell": ell,
                "lambda": lam.tolist(),
                "lhs": lhs.tolist(),
                "rhs": rhs.tolist(),
                "slack": slack.tolist(),
                "holds": ok.tolist(),
                "min_margin": float(np.min(lhs - rhs)),
            }
        )
    anchors = []
    for ell in range(0, j + 1):
        a_half, a_err = A(j - ell, np.array([0.5]))
        top = 0.5 * B ** (ell / p)
        anchors.append(
            {
                "ell": ell,
                "A_half": float(a_half[0]),
                "A_half_error": float(a_err[0]),
                "floor": float(B**-ell * a_half[0]),
                "lambda_max": top,
            }
        )
    # one-step self-similarity: the two copies account for the bulk of A_{j, lam}
    one_rhs, _ = A(j - 1, lam * B ** (-1.0 / p))
    ratio = np.where(lhs > 0, B**-1 * one_rhs / np.where(lhs > 0, lhs, 1.0), np.nan)
    report = {
        "params": params.to_dict(),
        "j": j,
        "gamma": gamma,
        "b": b,
        "B": B,
        "two_eps_alpha": 2.0 * eps**params.alpha,
        "checks": checks,
        "anchors": anchors,
        "copy_share": ratio.tolist(),
        "violations": violations,
        "holds": violations == 0,
    }
    if strict and violations:
        raise AssertionError(f"staircase inequality violated at {violations} sampled (l, lambda) points")
    return report


def write_table_csv(rows: list[dict], path) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True, default=float)
