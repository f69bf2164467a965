"""Corpus of test functions with exact reference quantities.

Every member is an immutable :class:`TestFunction`. One-dimensional members are
backed by a :class:`~diffquot.piecewise.PiecewisePoly1D`, which gives exact
increments, total variation and cell integrals. Two-dimensional members are
either radial (disc indicator, radial bump) or separable products (the lift of
a one-dimensional profile).

Members are addressable by string identifiers, see :func:`from_id`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .piecewise import PiecewisePoly1D, gauss_legendre01

__all__ = [
    "TestFunction",
    "SMOOTHSTEP",
    "smoothstep_poly",
    "plateau_cutoff",
    "make_hat",
    "make_zero",
    "make_indicator_interval",
    "make_disc_indicator",
    "make_smooth_bump",
    "make_smooth_bump_2d",
    "make_cantor_g",
    "make_boundary_g",
    "lift_to_dim",
    "cut_off",
    "rescale",
    "scale_values",
    "into_unit_interval",
    "from_id",
]

TAGS = ("smooth-compact", "lipschitz", "piecewise-linear", "indicator", "cantor-approximant")

# quintic smoothstep 6t^5 - 15t^4 + 10t^3, ascending coefficients
SMOOTHSTEP = (0.0, 0.0, 0.0, 10.0, -15.0, 6.0)


@dataclass(frozen=True, eq=False)
class TestFunction:
    """An evaluable function on R^n with declared geometry and reference norms.

    Attributes:
        name: Corpus identifier (round-trips through :func:`from_id`).
        dimension: n in {1, 2}.
        evaluate: Vectorised map; accepts shape (N,) for n = 1 or (N, n).
        support_radius: R, the function vanishes outside the ball (or box)
            of radius R about ``center``; for constant-at-infinity members the
            variation happens inside that ball.
        sup_bound: M with |u| <= M.
        smoothness_tag: one of ``TAGS``.
        exact_lp_norm: optional p -> ||u||_p.
        exact_grad_lp_norm: optional p -> ||grad u||_p.
        exact_tv: optional total variation.
        center: centre of the support ball / box.
        box: (lo, hi) arrays bounding the region where u (or its variation) lives.
        constant_at_infinity: True for monotone profiles with different tails.
        tails: (left, right) limits for 1D constant-at-infinity members.
        lipschitz: sup |grad u| (inf for jump functions).
        poly: 1D piecewise-polynomial backing (the oracle works on this).
        gradient: optional vectorised gradient, shape (N, n).
        radial: optional radial profile r -> f(r) on [0, R] for radial members.
        factors: optional 1D factors of a separable 2D product.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    dimension: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    sup_bound: float
    smoothness_tag: str
    exact_lp_norm: Callable[[float], float] | None = None
    exact_grad_lp_norm: Callable[[float], float] | None = None
    exact_tv: float | None = None
    center: np.ndarray = field(default_factory=lambda: np.zeros(1))
    box: tuple[np.ndarray, np.ndarray] | None = None
    constant_at_infinity: bool = False
    tails: tuple[float, float] = (0.0, 0.0)
    lipschitz: float = math.inf
    poly: PiecewisePoly1D | None = None
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    radial: PiecewisePoly1D | None = None
    factors: tuple[PiecewisePoly1D, ...] | None = None
    notes: str = ""

    def __post_init__(self):
        if self.smoothness_tag not in TAGS:
            raise ValueError(f"unknown smoothness tag {self.smoothness_tag!r}")
        if self.dimension not in (1, 2):
            raise ValueError("only n = 1 and n = 2 members are supported")

    # ----------------------------------------------------------------- basics
    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and x.ndim >= 1 and x.shape[-1:] == (1,) and x.ndim == 2:
            x = x[:, 0]
        return self.evaluate(x)

    @property
    def is_indicator(self) -> bool:
        return self.smoothness_tag == "indicator"

    @property
    def is_zero(self) -> bool:
        return self.sup_bound == 0.0

    @property
    def oscillation(self) -> float:
        """Bound on |u(y) - u(x)|."""
        if self.poly is not None:
            lo, hi = self.poly.range_values()
            return hi - lo
        return 2.0 * self.sup_bound

    @property
    def box_volume(self) -> float:
        lo, hi = self.sampling_box()
        return float(np.prod(hi - lo))

    def sampling_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.box is not None:
            return np.asarray(self.box[0], float), np.asarray(self.box[1], float)
        c = np.broadcast_to(self.center, (self.dimension,)).astype(float)
        return c - self.support_radius, c + self.support_radius

    # ----------------------------------------------------------- quadrature
    def quadrature(self, m: int = 10, sub: int = 16):
        """Nodes, weights and values of a quadrature rule covering the support."""
        if self.dimension == 1:
            if self.poly is None:
                raise ValueError("1D members need a polynomial backing")
            x, w, v = self.poly._sample_nodes(m, sub)
            return x.ravel(), w.ravel(), v.ravel()
        if self.radial is not None:
            r, w, v = self.radial._sample_nodes(m, sub)
            r = r.ravel()
            # angle integrates out exactly for radial integrands
            return r, 2.0 * math.pi * r * w.ravel(), v.ravel()
        if self.factors is not None:
            x1, w1, v1 = self.factors[0]._sample_nodes(m, sub)
            x2, w2, v2 = self.factors[1]._sample_nodes(m, sub)
            pts = np.stack(np.meshgrid(x1.ravel(), x2.ravel(), indexing="ij"), axis=-1).reshape(-1, 2)
            w = np.outer(w1.ravel(), w2.ravel()).ravel()
            v = np.outer(v1.ravel(), v2.ravel()).ravel()
            return pts, w, v
        raise ValueError(f"no quadrature rule for {self.name}")

    def integrate_abs(self, phi: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integral of phi(|u|) over the support (phi(0) = 0 assumed)."""
        if self.dimension == 1 and self.poly is not None:
            return self.poly.integrate_phi(phi)
        if self.dimension == 2 and self.radial is not None and self.radial.degree == 0:
            vals = np.abs(self.radial.coefs[:, 0])
            b = self.radial.breaks
            return float(np.sum(math.pi * (b[1:] ** 2 - b[:-1] ** 2) * phi(vals)))
        _, w, v = self.quadrature()
        return float(np.sum(w * phi(np.abs(v))))

    # ---------------------------------------------------------------- norms
    def lp_norm(self, p: float) -> float:
        if self.exact_lp_norm is not None:
            return float(self.exact_lp_norm(p))
        if self.constant_at_infinity:
            return math.inf
        if self.dimension == 1:
            return self.poly.lp_norm_p(p) ** (1.0 / p)
        return self.integrate_abs(lambda v: v**p) ** (1.0 / p)

    def grad_lp_norm(self, p: float) -> float:
        if self.exact_grad_lp_norm is not None:
            return float(self.exact_grad_lp_norm(p))
        if self.is_indicator:
            return math.inf
        if self.dimension == 1:
            return self.poly.derivative().lp_norm_p(p) ** (1.0 / p)
        return _grad_lp_2d(self, p) ** (1.0 / p)

    def total_variation(self) -> float:
        if self.exact_tv is not None:
            return float(self.exact_tv)
        if self.dimension == 1:
            return self.poly.total_variation()
        return self.grad_lp_norm(1.0)


def _grad_lp_2d(u: TestFunction, p: float) -> float:
    if u.radial is not None:
        d = u.radial.derivative()
        r, w, v = d._sample_nodes(12, 32)
        return float(np.sum(2.0 * math.pi * r * w * np.abs(v) ** p))
    f1, f2 = u.factors
    d1, d2 = f1.derivative(), f2.derivative()
    _, w1, a1 = f1._sample_nodes(10, 16)
    _, _, b1 = d1._sample_nodes(10, 16)
    _, w2, a2 = f2._sample_nodes(10, 16)
    _, _, b2 = d2._sample_nodes(10, 16)
    g1 = np.outer(b1.ravel(), a2.ravel())
    g2 = np.outer(a1.ravel(), b2.ravel())
    w = np.outer(w1.ravel(), w2.ravel())
    return float(np.sum(w * np.hypot(g1, g2) ** p))


# ---------------------------------------------------------------- helpers
def smoothstep_poly(a: float = 0.0, b: float = 1.0, rising: bool = True) -> PiecewisePoly1D:
    """Quintic smoothstep from 0 to 1 on [a, b] (or 1 to 0 when ``rising`` is False)."""
    if rising:
        return PiecewisePoly1D([a, b], [SMOOTHSTEP], 0.0, 1.0)
    return PiecewisePoly1D([a, b], [SMOOTHSTEP], 0.0, 1.0).affine(-1.0, a + b)


def plateau_cutoff() -> PiecewisePoly1D:
    """Cutoff supported in [-1, 2], equal to 1 on [-1/2, 3/2], values in [0, 1]."""
    up = smoothstep_poly(-1.0, -0.5)
    down = smoothstep_poly(1.5, 2.0, rising=False)
    out = up * down
    return PiecewisePoly1D(out.breaks, out.coefs, 0.0, 0.0)


def _from_poly(
    name: str,
    poly: PiecewisePoly1D,
    tag: str,
    **kw,
) -> TestFunction:
    a, b = poly.span
    const_inf = poly.left != 0.0 or poly.right != 0.0
    center = 0.5 * (a + b)
    radius = 0.5 * (b - a)
    lip = poly.lipschitz()
    return TestFunction(
        name=name,
        dimension=1,
        evaluate=poly,
        support_radius=radius,
        sup_bound=poly.sup_abs(),
        smoothness_tag=tag,
        center=np.array([center]),
        box=(np.array([a]), np.array([b])),
        constant_at_infinity=const_inf,
        tails=(poly.left, poly.right),
        lipschitz=lip,
        poly=poly,
        gradient=lambda x, d=poly.derivative(): d(np.asarray(x, float).reshape(-1))[:, None],
        **kw,
    )


# ---------------------------------------------------------------- members
def make_hat() -> TestFunction:
    """The hat max(0, 1 - |x|)."""
    poly = PiecewisePoly1D.linear_interp([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
    return _from_poly(
        "hat",
        poly,
        "piecewise-linear",
        exact_lp_norm=lambda p: (2.0 / (p + 1.0)) ** (1.0 / p),
        exact_grad_lp_norm=lambda p: 2.0 ** (1.0 / p),
        exact_tv=2.0,
    )


def make_zero() -> TestFunction:
    poly = PiecewisePoly1D([-1.0, 1.0], [[0.0]])
    return replace(
        _from_poly("zero", poly, "smooth-compact", exact_lp_norm=lambda p: 0.0, exact_grad_lp_norm=lambda p: 0.0, exact_tv=0.0),
        lipschitz=0.0,
    )


def make_indicator_interval(a: float = 0.0, b: float = 1.0) -> TestFunction:
    """Indicator of [a, b]."""
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    poly = PiecewisePoly1D.constant_pieces([a, b], [1.0])
    return _from_poly(
        f"indicator:{_fmt(a)},{_fmt(b)}",
        poly,
        "indicator",
        exact_lp_norm=lambda p: (b - a) ** (1.0 / p),
        exact_tv=2.0,
    )


def make_disc_indicator(r: float = 1.0) -> TestFunction:
    """Indicator of the closed disc of radius r about the origin in R^2."""
    if r <= 0:
        raise ValueError("radius must be positive")

    def ev(x):
        x = np.asarray(x, float)
        return (np.sum(x * x, axis=-1) <= r * r).astype(float)

    return TestFunction(
        name=f"disc:r={_fmt(r)}",
        dimension=2,
        evaluate=ev,
        support_radius=r,
        sup_bound=1.0,
        smoothness_tag="indicator",
        exact_lp_norm=lambda p: (math.pi * r * r) ** (1.0 / p),
        exact_tv=2.0 * math.pi * r,
        center=np.zeros(2),
        radial=PiecewisePoly1D.constant_pieces([0.0, r], [1.0]),
    )


def _bump_profile(x: np.ndarray, order: int = 0) -> np.ndarray:
    """exp(1 - 1/(1 - x^2)) on (-1, 1) and its first two derivatives."""
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    d = 1.0 - xi * xi
    f = np.exp(1.0 - 1.0 / d)
    if order == 0:
        out[inside] = f
    elif order == 1:
        out[inside] = -f * 2.0 * xi / d**2
    else:
        w1 = 2.0 * xi / d**2
        w2 = 2.0 / d**2 + 8.0 * xi * xi / d**3
        out[inside] = f * (w1 * w1 - w2)
    return out


_HERMITE5 = np.linalg.inv(
    np.array(
        [
            [1, 0, 0, 0, 0, 0],
            [0, 1, 0, 0, 0, 0],
            [0, 0, 2, 0, 0, 0],
            [1, 1, 1, 1, 1, 1],
            [0, 1, 2, 3, 4, 5],
            [0, 0, 2, 6, 12, 20],
        ],
        dtype=float,
    )
)


def _hermite_quintic(knots: np.ndarray, f: Callable[[np.ndarray, int], np.ndarray]) -> PiecewisePoly1D:
    L = np.diff(knots)
    y = [f(knots, k) for k in range(3)]
    rhs = np.stack(
        [
            y[0][:-1],
            y[1][:-1] * L,
            y[2][:-1] * L**2,
            y[0][1:],
            y[1][1:] * L,
            y[2][1:] * L**2,
        ],
        axis=1,
    )
    return PiecewisePoly1D(knots, rhs @ _HERMITE5.T, 0.0, 0.0)


def make_smooth_bump(pieces: int = 512) -> TestFunction:
    """C-infinity bump exp(1 - 1/(1 - x^2)) on (-1, 1), peak value 1 at 0.

    ``evaluate`` is the exact formula; ``poly`` is a quintic Hermite surrogate
    (C^2, error below 1e-9) used by the exact 1D machinery.
    """
    knots = np.linspace(-1.0, 1.0, pieces + 1)
    poly = _hermite_quintic(knots, _bump_profile)
    base = _from_poly("bump", poly, "smooth-compact")
    return replace(
        base,
        evaluate=lambda x: _bump_profile(np.asarray(x, float)),
        gradient=lambda x: _bump_profile(np.asarray(x, float).reshape(-1), 1)[:, None],
        sup_bound=1.0,
        notes="quintic Hermite surrogate on 512 cells backs exact 1D integrals",
    )


def make_smooth_bump_2d(pieces: int = 512) -> TestFunction:
    """Radial bump exp(1 - 1/(1 - |x|^2)) on the unit disc."""
    knots = np.linspace(0.0, 1.0, pieces + 1)
    profile = _hermite_quintic(knots, _bump_profile)

    def ev(x):
        x = np.asarray(x, float)
        return _bump_profile(np.sqrt(np.sum(x * x, axis=-1)))

    def grad(x):
        x = np.asarray(x, float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        d = _bump_profile(r, 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = np.where(r[..., None] > 0, x * (d / np.where(r > 0, r, 1.0))[..., None], 0.0)
        return g

    lip = float(np.max(np.abs(_bump_profile(np.linspace(0, 1, 20001), 1))))
    return TestFunction(
        name="bump2d",
        dimension=2,
        evaluate=ev,
        support_radius=1.0,
        sup_bound=1.0,
        smoothness_tag="smooth-compact",
        center=np.zeros(2),
        lipschitz=lip * 1.001,
        gradient=grad,
        radial=profile,
    )


def make_cantor_g(j: int, eps: float = 0.25) -> TestFunction:
    """Cantor-type approximant g_j built from the quintic smoothstep.

    g_j(x) = (g_{j-1}(x / eps) + g_{j-1}(1 - (1 - x) / eps)) / 2, so g_j is
    nondecreasing, 0 left of 0, 1 right of 1, and consists of 2^j scaled
    copies of g_0 separated by constant plateaus.
    """
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    if j < 0:
        raise ValueError("j must be nonnegative")
    # each level: left copy on [0, eps], right copy on [1 - eps, 1]
    starts = np.array([0.0])
    for _ in range(j):
        starts = np.concatenate([eps * starts, 1.0 - eps + eps * starts])
    width = eps**j
    k = starts.size
    step = 1.0 / k
    knots = [0.0]
    rows = []
    for i, a in enumerate(np.sort(starts)):
        if a > knots[-1] + 1e-15:
            knots.append(a)
            rows.append([i * step])
        knots.append(a + width)
        rows.append([i * step + c * step for c in SMOOTHSTEP[:1]] + [c * step for c in SMOOTHSTEP[1:]])
    poly = PiecewisePoly1D.from_local(np.array(knots), rows, 0.0, 1.0)
    return _from_poly(f"cantor:j={j},eps={_fmt(eps)}", poly, "cantor-approximant", exact_tv=1.0)


def make_boundary_g(j: int) -> TestFunction:
    """g_0(2^j x) g_0(2^j (2 - x)), the profile used at t = 1/q."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    w = 2.0**-j
    up = smoothstep_poly(0.0, w)
    down = smoothstep_poly(2.0 - w, 2.0, rising=False)
    prod = up * down
    poly = PiecewisePoly1D(prod.breaks, prod.coefs, 0.0, 0.0)
    return _from_poly(f"boundary:j={j}", poly, "lipschitz", exact_tv=2.0)


def lift_to_dim(g: TestFunction, n: int = 2) -> TestFunction:
    """u(x) = g(x_1) eta(x_1) eta(x_2) with the plateau cutoff eta."""
    if n < 2:
        raise ValueError("lift needs n >= 2")
    if n > 2:
        raise ValueError("only n = 2 is supported")
    if g.dimension != 1 or g.poly is None:
        raise ValueError("lift needs a 1D polynomial-backed member")
    eta = plateau_cutoff()
    f1 = g.poly * eta
    f1 = PiecewisePoly1D(f1.breaks, f1.coefs, 0.0, 0.0)
    f2 = eta
    d1, d2 = f1.derivative(), f2.derivative()

    def ev(x):
        x = np.asarray(x, float)
        return f1(x[..., 0]) * f2(x[..., 1])

    def grad(x):
        x = np.asarray(x, float)
        a, b = x[..., 0], x[..., 1]
        return np.stack([d1(a) * f2(b), f1(a) * d2(b)], axis=-1)

    lip = math.hypot(d1.sup_abs() * f2.sup_abs(), f1.sup_abs() * d2.sup_abs())
    lo = np.array([-1.0, -1.0])
    hi = np.array([2.0, 2.0])
    return TestFunction(
        name=f"lift({g.name})",
        dimension=2,
        evaluate=ev,
        support_radius=1.5 * math.sqrt(2.0),
        sup_bound=f1.sup_abs() * f2.sup_abs(),
        smoothness_tag="lipschitz",
        center=np.array([0.5, 0.5]),
        box=(lo, hi),
        lipschitz=lip,
        gradient=grad,
        factors=(f1, f2),
    )


def cut_off(g: TestFunction) -> TestFunction:
    """g eta with the plateau cutoff eta, the 1D factor of the lift.

    Turns members that are constant at infinity (the Cantor family) into
    compactly supported ones without touching them on [-1/2, 3/2].
    """
    if g.dimension != 1 or g.poly is None:
        raise ValueError("cut_off needs a 1D polynomial-backed member")
    f = g.poly * plateau_cutoff()
    f = PiecewisePoly1D(f.breaks, f.coefs, 0.0, 0.0)
    tv = None
    if g.smoothness_tag == "cantor-approximant":
        # rises from 0 to 1 inside [0, 1], falls back to 0 on [3/2, 2]
        tv = 2.0
    return _from_poly(f"cut({g.name})", f, "lipschitz", exact_tv=tv)


def rescale(u: TestFunction, t: float, shift: float = 0.0) -> TestFunction:
    """Dilation x -> u(t x + shift) (shift only in 1D).

    Declared norms are carried along: ||u_t||_p = t^{-n/p} ||u||_p,
    ||grad u_t||_p = t^{1-n/p} ||grad u||_p and TV scales by t^{1-n}.
    """
    if t <= 0:
        raise ValueError("dilation factor must be positive")
    n = u.dimension
    lp = None if u.exact_lp_norm is None else (lambda p, f=u.exact_lp_norm: t ** (-n / p) * f(p))
    glp = None if u.exact_grad_lp_norm is None else (lambda p, f=u.exact_grad_lp_norm: t ** (1 - n / p) * f(p))
    tv = None if u.exact_tv is None else t ** (1 - n) * u.exact_tv
    name = f"rescale({u.name},t={_fmt(t)}" + (f",shift={_fmt(shift)})" if shift else ")")
    if n == 1:
        poly = u.poly.affine(t, shift)
        out = _from_poly(name, poly, u.smoothness_tag, exact_lp_norm=lp, exact_grad_lp_norm=glp, exact_tv=tv)
        if u.poly is not None and u.evaluate is not u.poly:
            f = u.evaluate
            out = replace(out, evaluate=lambda x: f(t * np.asarray(x, float) + shift))
        return replace(out, sup_bound=u.sup_bound, notes=u.notes)
    if shift:
        raise ValueError("shift is only supported in 1D")
    f = u.evaluate
    box = None
    if u.box is not None:
        box = (u.box[0] / t, u.box[1] / t)
    radial = None if u.radial is None else u.radial.affine(t, 0.0)
    radial = None if radial is None else _restrict_radial(radial)
    factors = None if u.factors is None else tuple(fa.affine(t, 0.0) for fa in u.factors)
    grad = None
    if u.gradient is not None:
        g = u.gradient
        grad = lambda x: t * g(t * np.asarray(x, float))  # noqa: E731
    return replace(
        u,
        name=name,
        evaluate=lambda x: f(t * np.asarray(x, float)),
        support_radius=u.support_radius / t,
        center=u.center / t,
        box=box,
        lipschitz=u.lipschitz * t,
        exact_lp_norm=lp,
        exact_grad_lp_norm=glp,
        exact_tv=tv,
        gradient=grad,
        radial=radial,
        factors=factors,
    )


def _restrict_radial(p: PiecewisePoly1D) -> PiecewisePoly1D:
    return PiecewisePoly1D(p.breaks, p.coefs, 0.0, 0.0)


def scale_values(u: TestFunction, c: float) -> TestFunction:
    """The function c * u."""
    ac = abs(c)
    f = u.evaluate
    kw = dict(
        name=f"scale({u.name},c={_fmt(c)})",
        evaluate=lambda x: c * f(x),
        sup_bound=ac * u.sup_bound,
        exact_lp_norm=None if u.exact_lp_norm is None else (lambda p, g=u.exact_lp_norm: ac * g(p)),
        exact_grad_lp_norm=None if u.exact_grad_lp_norm is None else (lambda p, g=u.exact_grad_lp_norm: ac * g(p)),
        exact_tv=None if u.exact_tv is None else ac * u.exact_tv,
        lipschitz=ac * u.lipschitz,
        tails=(c * u.tails[0], c * u.tails[1]),
    )
    if u.poly is not None:
        kw["poly"] = u.poly * c
    if u.radial is not None:
        kw["radial"] = u.radial * c
    if u.factors is not None:
        kw["factors"] = (u.factors[0] * c, u.factors[1])
    if u.gradient is not None:
        g = u.gradient
        kw["gradient"] = lambda x: c * g(x)
    if u.smoothness_tag == "indicator" and ac != 1.0:
        kw["exact_tv"] = None if u.exact_tv is None else ac * u.exact_tv
    return replace(u, **kw)


def into_unit_interval(u: TestFunction, lo: float = 0.2, hi: float = 0.8) -> TestFunction:
    """Affinely move the variation region of a 1D member onto [lo, hi].

    Orientation-preserving affine changes of variable keep the 1D total
    variation, so ``exact_tv`` is carried over unchanged.
    """
    if u.dimension != 1:
        raise ValueError("only 1D members can be moved into the unit interval")
    a, b = u.poly.span
    t = (b - a) / (hi - lo)
    shift = a - t * lo
    out = rescale(u, t, shift)
    return replace(out, name=f"unit({u.name})")


# ----------------------------------------------------------- identifiers
def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _kv(arg: str) -> tuple[list[str], dict[str, str]]:
    pos, kw = [], {}
    for part in filter(None, (a.strip() for a in arg.split(","))):
        if "=" in part:
            k, v = part.split("=", 1)
            kw[k.strip()] = v.strip()
        else:
            pos.append(part)
    return pos, kw


def _split_wrapper(s: str) -> tuple[str, str, str] | None:
    m = re.fullmatch(r"(\w+)\((.*)\)", s)
    if not m:
        return None
    head, body = m.group(1), m.group(2)
    # trailing ",key=value" groups with transform keys belong to the wrapper
    k = re.fullmatch(r"(.*?)((?:,(?:t|shift|c|n)=[-+\w.]+)*)", body)
    return head, k.group(1), k.group(2)


def from_id(spec: str) -> TestFunction:
    """Construct a corpus member from its identifier.

    Grammar (whitespace ignored)::

        hat | zero | bump | bump2d | indicator:a,b | disc:r=R
        cantor:j=J,eps=E | boundary:j=J
        lift(ID) | cut(ID) | rescale(ID,t=T[,shift=S]) | scale(ID,c=C) | unit(ID)
    """
    s = spec.replace(" ", "")
    wrapped = _split_wrapper(s)
    if wrapped is not None:
        head, inner, rest = wrapped
        _, kw = _kv(rest)
        base = from_id(inner)
        if head == "lift":
            return lift_to_dim(base, int(kw.get("n", 2)))
        if head == "rescale":
            return rescale(base, float(kw["t"]), float(kw.get("shift", 0.0)))
        if head == "scale":
            return scale_values(base, float(kw["c"]))
        if head == "unit":
            return into_unit_interval(base)
        if head == "cut":
            return cut_off(base)
        raise ValueError(f"unknown transform {head!r}")
    name, _, arg = s.partition(":")
    pos, kw = _kv(arg)
    if name == "hat":
        return make_hat()
    if name == "zero":
        return make_zero()
    if name == "bump":
        return make_smooth_bump()
    if name == "bump2d":
        return make_smooth_bump_2d()
    if name == "indicator":
        a, b = (float(v) for v in pos) if pos else (0.0, 1.0)
        return make_indicator_interval(a, b)
    if name == "disc":
        return make_disc_indicator(float(kw.get("r", pos[0] if pos else 1.0)))
    if name == "cantor":
        return make_cantor_g(int(kw.get("j", 0)), float(kw.get("eps", 0.25)))
    if name == "boundary":
        return make_boundary_g(int(kw.get("j", 0)))
    raise ValueError(f"unknown corpus identifier {spec!r}")
