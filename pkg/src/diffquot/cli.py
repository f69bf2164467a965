"""Command-line experiment runner.

A config is a JSON document::

    {"schema_version": 1, "seed": 0, "experiments": [{"type": "limits", ...}, ...]}

Every experiment writes CSV/JSON artifacts under ``<out-dir>/<name>/`` and a
list of checks (value, target, tolerance, pass/fail). The run summary goes
to ``<out-dir>/summary.json``; the exit status is 0 only if every hard
check passes.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .counterexamples import (
    InterpolationParams,
    boundary_family_blowup,
    growth_table,
    staircase_check,
    write_summary_json,
    write_table_csv,
)
from .constants import k_constant, k_constant_quadrature, sphere_area
from .errors import ConfigError, InconclusiveTruncation, NotConverged, ResolutionFailure
from .funcspace import from_id
from .interpolation import gn_inequality_check, lorentz_interpolation_check
from .limits import (
    FORMULAS,
    bbm_limit,
    indicator_anomaly,
    limit_row,
    lp_limit,
    msh_limit,
    predicted_lp,
    predicted_sobolev,
    sobolev_limit,
    write_limit_table,
)
from .measures import (
    MeasureSpec,
    QuotientSpec,
    SamplingPlan,
    default_lambda_grid,
    estimate_distribution,
    function_distribution,
    gamma_zero_threshold,
    oracle_distribution_1d,
)
from .norms import (
    LorentzSpec,
    fractional_seminorm,
    layer_cake_norm,
    lorentz_norm,
    tao_identity_check,
)
from .wavelets import WAVELET_PAIR, cddd_sandwich, cube_total_variation, haar_analyze

__all__ = ["main", "run_config", "EXIT_OK", "EXIT_CONFIG", "EXIT_NONCONVERGED", "EXIT_ASSERTION"]

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_ASSERTION = 4
EXPERIMENT_TYPES = ("norms", "distribution", "limits", "bbm", "counterexample", "interp", "wavelet")


@dataclass
class Context:
    out_dir: Path
    seed: int
    threads: int = 1
    tolerance_scale: float = 1.0


@dataclass
class Outcome:
    name: str
    type: str
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    error: str | None = None
    error_kind: str | None = None

    def check(self, name, value, target, tol, passed=None, hard=True, **extra):
        if passed is None:
            passed = bool(math.isfinite(value) and abs(value - target) <= tol)
        self.checks.append(
            {"check": name, "value": _num(value), "target": _num(target), "tolerance": _num(tol), "passed": bool(passed), "hard": hard, **extra}
        )


def _num(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items() if k != "curve"}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return _num(obj)


def _dump(path: Path, payload) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=1, sort_keys=True) + "\n")


def _write_rows(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    cols = list(rows[0])
    for r in rows[1:]:
        cols += [c for c in r if c not in cols]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})


def _grid(spec, default=(1e-3, 1e6, 16)) -> np.ndarray:
    if spec is None:
        return default_lambda_grid(*default)
    if isinstance(spec, list):
        return np.asarray(spec, float)
    if isinstance(spec, dict) and "values" in spec:
        return np.asarray(spec["values"], float)
    return default_lambda_grid(float(spec.get("lo", default[0])), float(spec.get("hi", default[1])), int(spec.get("per_decade", default[2])))


def _req(exp: dict, key: str):
    if key not in exp:
        raise ConfigError(f"experiment {exp.get('name', exp.get('type'))!r} needs {key!r}")
    return exp[key]


def _quotient_b(exp: dict, gamma: float) -> float:
    if "b" in exp:
        return float(exp["b"])
    fam = exp.get("family", "sobolev")
    p = float(exp.get("p", 1.0))
    if fam == "sobolev":
        return 1.0 + gamma / p
    if fam == "lp":
        return gamma / p
    raise ConfigError(f"unknown quotient family {fam!r}")


# ------------------------------------------------------------- experiments
def exp_norms(exp: dict, ctx: Context, out: Outcome, d: Path) -> None:
    """Lorentz norms of a quotient curve, Tao-lift identities and seminorms."""
    tol = float(exp.get("tolerance", 0.01)) * ctx.tolerance_scale
    rows = []
    if "constants" in exp:
        cs = exp["constants"]
        for n in cs.get("n", [1, 2, 3]):
            area = sphere_area(int(n))
            want = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}.get(int(n))
            rows.append({"quantity": "sigma", "n": n, "value": area, "exact": want, "formula": "2 pi^(n/2) / Gamma(n/2)"})
            if want is not None:
                out.check(f"sigma_{int(n) - 1}", area, want, 1e-12)
            for p in cs.get("p", [1.0, 1.5, 2.0, 3.0]):
                k, kq = k_constant(float(p), int(n)), k_constant_quadrature(float(p), int(n))
                rows.append({"quantity": "k", "n": n, "p": p, "value": k, "exact": kq, "formula": "closed form vs sphere quadrature"})
                out.check(f"k({p},{n}) closed form vs quadrature", k, kq, 1e-10)
    if "function" in exp and "gamma" in exp:
        u = from_id(exp["function"])
        gamma = float(exp["gamma"])
        b = _quotient_b(exp, gamma)
        curve = oracle_distribution_1d(u, MeasureSpec(1, gamma), QuotientSpec(b), _grid(exp.get("lambda")), strict=False)
        for item in exp.get("lorentz", [{"p": 1.0, "r": "infinity"}]):
            nv = lorentz_norm(curve, LorentzSpec(float(item["p"]), item.get("r", "infinity")))
            rows.append(
                {"function": u.name, "quantity": "lorentz", "gamma": gamma, "b": b, "p": item["p"], "r": item.get("r", "infinity"),
                 "value": nv.value, "error": nv.error, "verdict": nv.verdict, "formula": "curve functional"}
            )
            if "expected" in item:
                out.check(f"lorentz {u.name} p={item['p']} r={item.get('r')}", nv.value / float(item["expected"]), 1.0, tol)
    for fid in exp.get("tao", []):
        f = from_id(fid)
        for p in exp.get("tao_p", [1.0, 2.0]):
            exact, weak = tao_identity_check(f, float(p))
            own = function_distribution(f)
            cake = layer_cake_norm(own, float(p)).value
            lor = lorentz_norm(own, LorentzSpec(float(p), float(p))).value
            for q, v, ref in (("weak(lift)", weak, exact), ("layer-cake", cake, exact), ("lorentz r=p", lor, cake)):
                rows.append({"function": f.name, "quantity": q, "p": p, "value": v, "exact": ref,
                             "formula": "layer-cake norm" if q == "lorentz r=p" else "||f||_p exact"})
                out.check(f"{q} {f.name} p={p}", v / ref if ref else v, 1.0 if ref else 0.0, tol)
    for item in exp.get("seminorm", []):
        u = from_id(item["function"])
        sv = fractional_seminorm(u, float(item["s"]), float(item["p"]))
        rows.append({"function": u.name, "quantity": "seminorm", "s": item["s"], "p": item["p"], "value": sv.value, "error": sv.error, "verdict": sv.verdict, "formula": "Gagliardo"})
        if "expected" in item:
            out.check(f"seminorm {u.name} s={item['s']} p={item['p']}", sv.value / float(item["expected"]), 1.0, tol)
    _write_rows(d / "norms.csv", rows)
    out.artifacts.append("norms.csv")


def exp_distribution(exp: dict, ctx: Context, out: Outcome, d: Path) -> None:
    """Survival curve by oracle, Monte Carlo, or both with an agreement check."""
    u = from_id(_req(exp, "function"))
    gamma = float(_req(exp, "gamma"))
    b = _quotient_b(exp, gamma)
    lam = _grid(exp.get("lambda"), (1e-2, 1e2, 4))
    method = exp.get("method", "both" if u.dimension == 1 else "mc")
    curves = {}
    if method in ("oracle", "both"):
        curves["oracle"] = oracle_distribution_1d(u, MeasureSpec(1, gamma), QuotientSpec(b), lam, strict=False)
    if method in ("mc", "both"):
        plan_kw = dict(exp.get("plan", {}))
        plan_kw.setdefault("seed", ctx.seed)
        plan_kw.setdefault("threads", ctx.threads)
        plan = SamplingPlan.for_function(u, **plan_kw)
        curves["mc"] = estimate_distribution(u, MeasureSpec(u.dimension, gamma), QuotientSpec(b), plan, lam, "flag")
    for key, c in curves.items():
        c.to_csv(d / f"curve_{key}.csv")
        (d / f"curve_{key}.dat").write_text("".join(f"{x:.17g} {y:.17g}\n" for x, y in zip(c.lambda_grid, c.mu_values)))
        out.artifacts += [f"curve_{key}.csv", f"curve_{key}.dat"]
    if len(curves) == 2:
        z = float(exp.get("z", 4.0)) * ctx.tolerance_scale
        o, m = curves["oracle"], curves["mc"]
        bound = z * m.stderr + o.total_error + m.truncation_bound
        gap = np.abs(o.mu_values - m.mu_values)
        worst = float(np.max(gap / np.maximum(bound, 1e-300)))
        out.check(f"mc vs oracle {u.name} gamma={gamma} b={b}", worst, 0.0, 1.0, passed=bool(np.all(gap <= bound)), z=z)
        _write_rows(d / "comparison.csv", [
            {"lambda": x, "oracle": a, "mc": c, "gap": g, "bound": e}
            for x, a, c, g, e in zip(lam, o.mu_values, m.mu_values, gap, bound)
        ])
        out.artifacts.append("comparison.csv")


def exp_limits(exp: dict, ctx: Context, out: Outcome, d: Path) -> None:
    """Plateau limits, exact-oracle points and gamma = 0 threshold probes."""
    rows, extra = [], []
    for case in _req(exp, "cases"):
        fam = case.get("family", "sobolev")
        u = from_id(case["function"])
        tol = float(case.get("tolerance", 0.02)) * ctx.tolerance_scale
        gamma = float(case.get("gamma", 0.0))
        p = float(case.get("p", 1.0))
        if fam == "threshold":
            for lam, want in zip(case["lambdas"], case["expect"]):
                res = gamma_zero_threshold(u, float(lam))
                extra.append({"function": u.name, "family": fam, "lambda": lam, "verdict": res["verdict"], "expected": want})
                out.check(f"threshold {u.name} lambda={lam}", res["verdict"], want, None, passed=res["verdict"] == want)
            continue
        if fam == "pointwise":
            b = _quotient_b({**case, "family": case.get("quotient", "lp")}, gamma)
            lam = np.asarray(case["lambdas"], float)
            c = oracle_distribution_1d(u, MeasureSpec(1, gamma), QuotientSpec(b), lam, strict=False)
            pred = predicted_lp(u, gamma, p) if case.get("quotient", "lp") == "lp" else predicted_sobolev(u, gamma, p)
            for x, v in zip(lam, lam**p * c.mu_values):
                extra.append({"function": u.name, "family": fam, "gamma": gamma, "p": p, "lambda": x, "value": v, "predicted": pred,
                              "formula": FORMULAS["lp"] if case.get("quotient", "lp") == "lp" else FORMULAS["sobolev"]})
                out.check(f"pointwise {u.name} gamma={gamma} lambda={x:g}", v / pred, 1.0, tol)
            continue
        if fam == "sobolev":
            est = sobolev_limit(u, gamma, p)
        elif fam == "indicator":
            est = indicator_anomaly(u, gamma)
        elif fam == "lp":
            est = lp_limit(u, gamma, p)
        else:
            raise ConfigError(f"unknown limit family {fam!r}")
        consts = {"n": u.dimension, "p": p, "gamma": gamma}
        rows.append(limit_row(u.name, fam, gamma, p, est, consts))
        out.check(f"{fam} {u.name} gamma={gamma} p={p}", est.ratio, 1.0, tol, slope=est.slope_diagnostic)
        if fam == "indicator" and "w11_tolerance" in case:
            t2 = float(case["w11_tolerance"]) * ctx.tolerance_scale
            r, want = est.details["ratio_to_w11"], est.details["expected_ratio_to_w11"]
            out.check(f"indicator/W11 ratio {u.name} gamma={gamma}", r / want, 1.0, t2)
    write_limit_table(rows, d / "limits.csv")
    out.artifacts.append("limits.csv")
    if extra:
        _write_rows(d / "limit_points.csv", extra)
        out.artifacts.append("limit_points.csv")


def exp_bbm(exp: dict, ctx: Context, out: Outcome, d: Path) -> None:
    """BBM (s -> 1-) and MSh (s -> 0+) extrapolations."""
    rows = []
    for case in _req(exp, "cases"):
        u = from_id(case["function"])
        p = float(case.get("p", 1.0))
        kind = case.get("kind", "bbm")
        tol = float(case.get("tolerance", 0.02)) * ctx.tolerance_scale
        est = bbm_limit(u, p) if kind == "bbm" else msh_limit(u, p)
        rows.append(limit_row(u.name, kind, "", p, est, {"n": u.dimension, "p": p}))
        out.check(f"{kind} {u.name} p={p}", est.ratio, 1.0, tol)
    write_limit_table(rows, d / "bbm.csv")
    out.artifacts.append("bbm.csv")


def exp_counterexample(exp: dict, ctx: Context, out: Outcome, d: Path) -> None:
    """Growth tables of the Cantor and boundary families, and the staircase bound."""
    tol = float(exp.get("tolerance", 0.15)) * ctx.tolerance_scale
    if "t" in exp:
        params = InterpolationParams(float(exp["t"]), float(exp["q"]), float(exp["theta"]))
        gamma = float(exp.get("gamma", 1.0))
        r = float(exp.get("r", 2.0))
        rows, summ = growth_table(params, int(exp.get("j_max", 8)), gamma, r, threads=ctx.threads)
        write_table_csv(rows, d / "growth.csv")
        write_summary_json(summ, d / "growth_summary.json")
        out.artifacts += ["growth.csv", "growth_summary.json"]
        out.check("cantor seminorm^q exponent", summ["seminorm_power_exponent"], 1.0, tol, formula="||g_j||^q ~ j")
        out.check("cantor lorentz exponent", summ["lorentz_exponent"], 1.0 / r, tol, formula="[Q g_j]_{p,r} ~ j^(1/r)")
        out.check("cantor TV", summ["tv_max_deviation"], 0.0, 1e-6)
        st = exp.get("staircase")
        if st:
            rep = staircase_check(params, int(st.get("j", 3)), float(st.get("gamma", gamma)), strict=False)
            _dump(d / "staircase.json", rep)
            out.artifacts.append("staircase.json")
            out.check("staircase inequality", rep["violations"], 0, 0)
            low = min(a["A_half"] for a in rep["anchors"])
            out.check("staircase anchor min A_{j-l,1/2}", low, "> 0", None, passed=low > 0)
    bd = exp.get("boundary")
    if bd:
        rows, summ = boundary_family_blowup(
            int(bd.get("j_max", 8)), float(bd.get("gamma", 1.0)), float(bd.get("p", 2.0)), float(bd.get("r", 2.0)),
            q=float(bd.get("q", 2.0)), threads=ctx.threads,
        )
        write_table_csv(rows, d / "boundary.csv")
        write_summary_json(summ, d / "boundary_summary.json")
        out.artifacts += ["boundary.csv", "boundary_summary.json"]
        out.check("boundary lorentz exponent", summ["lorentz_exponent"], 1.0 / summ["r"], tol)
        out.check("boundary seminorm^q exponent", summ["seminorm_power_exponent"], 1.0, tol)
        out.check("boundary TV", summ["tv_max_deviation"], 0.0, 1e-6)


def _spread(values) -> float:
    v = np.asarray(values, float)
    return float((v.max() - v.min()) / np.abs(v).max()) if v.size and np.abs(v).max() > 0 else 0.0


def exp_interp(exp: dict, ctx: Context, out: Outcome, d: Path) -> None:
    """Gagliardo-Nirenberg (t < 1/q) or Lorentz interpolation (t >= 1/q) reports."""
    t, q, th = float(_req(exp, "t")), float(_req(exp, "q")), float(_req(exp, "theta"))
    mode = exp.get("mode", "lorentz" if t >= 1.0 / q else "gn")
    reports = []
    for fid in _req(exp, "functions"):
        u = from_id(fid)
        if mode == "gn":
            reports.append(gn_inequality_check(u, t, q, th))
        else:
            reports.append(lorentz_interpolation_check(u, t, q, th, float(exp.get("gamma", 1.0)), seed=ctx.seed))
    _dump(d / "interp.json", {"mode": mode, "reports": reports})
    out.artifacts.append("interp.json")
    key = "ratio" if mode == "gn" else "constant"
    consts = [r[key] for r in reports]
    if mode == "lorentz":
        worst = max(r["factorization_rel_error"] for r in reports)
        out.check("pointwise factorization", worst, 0.0, 1e-12)
    if "stability" in exp and len(consts) > 1:
        tol = float(exp["stability"]) * ctx.tolerance_scale
        out.check(f"{key} stability", _spread(consts), 0.0, tol, values=consts)


def exp_wavelet(exp: dict, ctx: Context, out: Outcome, d: Path) -> None:
    """Haar coefficients and the weak-l^1 / TV sandwich across truncation levels."""
    Js = [int(j) for j in exp.get("levels", [8, 9, 10, 11, 12])]
    tol = float(exp.get("stability", 0.10)) * ctx.tolerance_scale
    rows = []
    for fid in _req(exp, "functions"):
        u = from_id(fid)
        tv = cube_total_variation(u) if u.dimension == 1 else u.total_variation()
        for g in exp.get("gammas", [1.0]):
            ratios = []
            for J in Js:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    seq = haar_analyze(u, J, float(g))
                rep = cddd_sandwich(seq, float(g), tv)
                ratios.append(rep.weak_ratio)
                rows.append({"function": u.name, "gamma": g, "J": J, "weak_l1": rep.weak_l1, "tv": tv, "l1": rep.l1,
                             "weak_over_tv": rep.weak_ratio, "l1_over_tv": rep.l1_ratio, "pair": WAVELET_PAIR})
            out.check(f"weak/TV stability {u.name} gamma={g}", _spread(ratios), 0.0, tol, values=ratios)
        safe = "".join(ch if ch.isalnum() else "_" for ch in u.name)
        seq.to_csv(d / f"coefficients_{safe}.csv")
        out.artifacts.append(f"coefficients_{safe}.csv")
    _write_rows(d / "sandwich.csv", rows)
    out.artifacts.append("sandwich.csv")


HANDLERS = {
    "norms": exp_norms,
    "distribution": exp_distribution,
    "limits": exp_limits,
    "bbm": exp_bbm,
    "counterexample": exp_counterexample,
    "interp": exp_interp,
    "wavelet": exp_wavelet,
}


# ------------------------------------------------------------------ driver
def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {cfg.get('schema_version')!r}; expected {SCHEMA_VERSION}")
    exps = cfg.get("experiments")
    if not isinstance(exps, list) or not exps:
        raise ConfigError("config needs a non-empty 'experiments' list")
    names = set()
    for i, exp in enumerate(exps):
        if not isinstance(exp, dict) or exp.get("type") not in EXPERIMENT_TYPES:
            raise ConfigError(f"experiment {i} has unknown type {exp.get('type') if isinstance(exp, dict) else exp!r}")
        name = exp.setdefault("name", f"{i:02d}-{exp['type']}")
        if name in names:
            raise ConfigError(f"duplicate experiment name {name!r}")
        names.add(name)


def _run_one(exp: dict, ctx: Context, index: int) -> Outcome:
    out = Outcome(exp["name"], exp["type"])
    d = ctx.out_dir / exp["name"]
    d.mkdir(parents=True, exist_ok=True)
    seed = int(np.random.SeedSequence([ctx.seed, index]).generate_state(1)[0])
    sub = Context(ctx.out_dir, seed, ctx.threads, ctx.tolerance_scale)
    try:
        HANDLERS[exp["type"]](exp, sub, out, d)
    except (NotConverged, ResolutionFailure, InconclusiveTruncation) as exc:
        out.error, out.error_kind = str(exc), "nonconverged"
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        out.error, out.error_kind = f"{type(exc).__name__}: {exc}", "config"
    _dump(d / "checks.json", {"name": out.name, "type": out.type, "checks": out.checks, "artifacts": out.artifacts, "error": out.error})
    return out


def run_config(cfg: dict, out_dir, seed: int | None = None, threads: int = 1, tolerance_scale: float = 1.0, only: str | None = None):
    """Run the experiments of a validated config; returns (exit status, summary)."""
    validate_config(cfg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = Context(out_dir, int(cfg.get("seed", 0) if seed is None else seed), max(1, threads), tolerance_scale)
    exps = [(i, e) for i, e in enumerate(cfg["experiments"]) if only is None or e["type"] == only]
    if not exps:
        raise ConfigError(f"config has no experiments of type {only!r}")
    # experiments run in a bounded pool; results are collected in config order
    if ctx.threads > 1 and len(exps) > 1:
        with ThreadPoolExecutor(ctx.threads) as pool:
            outcomes = list(pool.map(lambda ie: _run_one(ie[1], ctx, ie[0]), exps))
    else:
        outcomes = [_run_one(e, ctx, i) for i, e in exps]
    checks = [dict(c, experiment=o.name) for o in outcomes for c in o.checks]
    failed = [c for c in checks if c["hard"] and not c["passed"]]
    status = EXIT_OK
    if any(o.error_kind == "config" for o in outcomes):
        status = EXIT_CONFIG
    elif any(o.error_kind == "nonconverged" for o in outcomes):
        status = EXIT_NONCONVERGED
    elif failed:
        status = EXIT_ASSERTION
    summary = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "seed": ctx.seed,
        "tolerance_scale": tolerance_scale,
        "experiments": [{"name": o.name, "type": o.type, "artifacts": o.artifacts, "error": o.error} for o in outcomes],
        "checks": checks,
        "passed": status == EXIT_OK,
        "exit_status": status,
    }
    _dump(out_dir / "summary.json", summary)
    return status, summary


def _format_checks(checks) -> str:
    lines = []
    for c in checks:
        mark = "PASS" if c["passed"] else ("FAIL" if c["hard"] else "warn")
        tol = "" if c["tolerance"] is None else f" tol={c['tolerance']!r}"
        lines.append(f"{mark}  {c.get('experiment', '')}: {c['check']}  value={c['value']!r} target={c['target']!r}{tol}")
    return "\n".join(lines)


def report(out_dir) -> tuple[int, str]:
    """Markdown digest of ``summary.json`` in ``out_dir``."""
    path = Path(out_dir) / "summary.json"
    if not path.exists():
        raise ConfigError(f"no summary.json in {out_dir}")
    summary = json.loads(path.read_text())
    lines = ["| experiment | check | value | target | tolerance | result |", "|---|---|---|---|---|---|"]
    for c in summary["checks"]:
        res = "pass" if c["passed"] else ("FAIL" if c["hard"] else "soft-fail")
        lines.append(f"| {c['experiment']} | {c['check']} | {c['value']} | {c['target']} | {'' if c['tolerance'] is None else c['tolerance']} | {res} |")
    for e in summary["experiments"]:
        if e["error"]:
            lines.append(f"\n**{e['name']}** stopped: {e['error']}")
    text = "\n".join(lines) + "\n"
    (Path(out_dir) / "report.md").write_text(text)
    return int(summary["exit_status"]), text


def _parse_value(v: str):
    try:
        return json.loads(v)
    except json.JSONDecodeError:
        return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out-dir", default="diffquot-out", help="directory for artifacts")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every declared tolerance")
    ap = argparse.ArgumentParser(prog="diffquot", description="Difference-quotient experiments and reports.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run every experiment of a config")
    run.add_argument("config_path", nargs="?", help="config file (same as --config)")
    for t in EXPERIMENT_TYPES:
        sp = sub.add_parser(t, parents=[common], help=f"run the {t} experiments of a config, or one built from --param")
        sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="experiment field (JSON value)")
    rp = sub.add_parser("report", parents=[common], help="summarise an output directory")
    rp.add_argument("directory", nargs="?", help="output directory (defaults to --out-dir)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            status, text = report(args.directory or args.out_dir)
            print(text, end="")
            return status
        if args.command == "run":
            path = args.config_path or args.config
            if not path:
                raise ConfigError("run needs a config path")
            cfg, only = load_config(path), None
        elif args.config:
            cfg, only = load_config(args.config), args.command
        else:
            exp = {"type": args.command}
            for kv in args.param:
                k, sep, v = kv.partition("=")
                if not sep:
                    raise ConfigError(f"--param expects KEY=VALUE, got {kv!r}")
                exp[k] = _parse_value(v)
            cfg, only = {"schema_version": SCHEMA_VERSION, "experiments": [exp]}, None
        status, summary = run_config(cfg, args.out_dir, args.seed, args.threads, args.tolerance_scale, only)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(_format_checks(summary["checks"]))
    for e in summary["experiments"]:
        if e["error"]:
            print(f"{e['name']}: {e['error']}", file=sys.stderr)
    print(f"exit status {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())
