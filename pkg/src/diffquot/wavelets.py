"""Haar coefficients on [0,1)^n and the weak-l^1 / l^1 sandwich for the total variation.

The dual pair is the orthonormal Haar pair, phi = 1_[0,1) and
psi = 1_[0,1/2) - 1_[1/2,1), with dual functions normalised as
2^{jn} psi^e(2^j x - k). A coefficient u^e_I is rescaled to
|u^e_I| / l(I)^(1+gamma) and weighted by 2^{-j(gamma+n)}.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .funcspace import TestFunction
from .piecewise import PiecewisePoly1D, gauss_legendre01

__all__ = [
    "DyadicIndex",
    "CoefficientSequence",
    "haar_analyze",
    "cddd_sandwich",
    "cube_total_variation",
    "SandwichReport",
    "WAVELET_PAIR",
]

WAVELET_PAIR = "haar (orthonormal, self-dual)"
MAX_LEVEL = {1: 12, 2: 8}


@dataclass(frozen=True, order=True)
class DyadicIndex:
    """(e, I) with I = 2^-j (k + [0,1)^n) and e in {0,1}^n minus 0."""

    j: int
    k: tuple[int, ...]
    e: tuple[int, ...]

    @property
    def side(self) -> float:
        return 2.0**-self.j

    @property
    def cube(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.k, float) * self.side
        return lo, lo + self.side


def _types(n: int) -> list[tuple[int, ...]]:
    return [e for e in product((0, 1), repeat=n) if any(e)]


@dataclass
class CoefficientSequence:
    """Haar coefficients up to level J.

    ``levels[j]`` has shape (2^n - 1, 2^j, ..., 2^j): axis 0 runs over the
    wavelet types of :attr:`types`, the rest over the lattice offsets k.
    """

    n: int
    max_level: int
    gamma: float
    levels: list[np.ndarray]
    function: str = ""
    exact: bool = True
    _entries: dict | None = field(default=None, repr=False)

    @property
    def types(self) -> list[tuple[int, ...]]:
        return _types(self.n)

    def weight(self, j: int) -> float:
        """nu~_gamma of a single index at level j."""
        return 2.0 ** (-j * (self.gamma + self.n))

    @property
    def entries(self) -> dict:
        if self._entries is None:
            out = {}
            for j, arr in enumerate(self.levels):
                for t, e in enumerate(self.types):
                    for k in np.ndindex(*arr.shape[1:]):
                        out[DyadicIndex(j, tuple(int(i) for i in k), e)] = float(arr[(t,) + k])
            self._entries = out
        return self._entries

    def count(self, j: int) -> int:
        return int(self.levels[j].size)

    def scaled(self, j: int) -> np.ndarray:
        """|u^e_I| / l(I)^(1+gamma) at level j, flattened."""
        return np.abs(self.levels[j]).ravel() * 2.0 ** (j * (1.0 + self.gamma))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["e", "j", "k", "value"])
        for j, arr in enumerate(self.levels):
            for t, e in enumerate(self.types):
                for k in np.ndindex(*arr.shape[1:]):
                    w.writerow(["".join(map(str, e)), j, ",".join(map(str, k)), f"{arr[(t,) + k]:.17g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def cube_total_variation(u: TestFunction) -> float:
    """Variation of a 1D member inside the open cube (0, 1).

    This is the seminorm the Haar coefficients on [0,1) can see: jumps
    sitting exactly at 0 or 1 and anything outside the cube are ignored.
    """
    if u.dimension != 1 or u.poly is None:
        raise ValueError("cube_total_variation handles 1D polynomial-backed members")
    ref = u.poly.refine([0.0, 1.0])
    mids = 0.5 * (ref.breaks[:-1] + ref.breaks[1:])
    keep = (mids > 0.0) & (mids < 1.0)
    if not np.any(keep):
        return 0.0
    idx = np.flatnonzero(keep)
    pts = ref.breaks[idx[0] : idx[-1] + 2]
    first, last = PiecewisePoly1D(pts, ref.coefs[idx], 0.0, 0.0).endpoint_values()
    # continue the restriction by its boundary values so no tail jump is counted
    return PiecewisePoly1D(pts, ref.coefs[idx], float(first[0]), float(last[-1])).total_variation()


def _cell_integrals_1d(poly, N: int) -> np.ndarray:
    """Exact integrals of a piecewise polynomial over the N cells of [0,1)."""
    grid = np.linspace(0.0, 1.0, N + 1)
    ref = poly.refine(grid)
    cells = ref.cell_integrals()
    # pieces beyond x = 1 form their own trailing group, which is dropped
    idx = np.searchsorted(ref.breaks, grid)
    return np.add.reduceat(np.append(cells, 0.0), idx)[:-1]


def _cell_integrals_quadrature(u: TestFunction, N: int, m: int = 4) -> np.ndarray:
    x, w = gauss_legendre01(m)
    h = 1.0 / N
    if u.dimension == 1:
        pts = (np.arange(N)[:, None] + x[None, :]) * h
        return (u(pts.ravel()).reshape(N, m) @ w) * h
    a = ((np.arange(N)[:, None] + x[None, :]) * h).ravel()
    X, Y = np.meshgrid(a, a, indexing="ij")
    vals = u(np.stack([X.ravel(), Y.ravel()], axis=1)).reshape(N, m, N, m)
    return np.einsum("iajb,a,b->ij", vals, w, w) * h * h


def _leaks(u: TestFunction) -> bool:
    lo, hi = u.sampling_box()
    if u.dimension == 1 and u.poly is not None:
        if u.poly.left != 0.0 or u.poly.right != 0.0:
            return True
        a, b = u.poly.span
        outside = np.concatenate([np.linspace(a, min(b, 0.0), 64), np.linspace(max(a, 1.0), b, 64)])
        outside = outside[(outside < 0.0) | (outside > 1.0)]
        return bool(outside.size and np.any(u.poly(outside) != 0.0))
    return bool(np.any(lo < 0.0) or np.any(hi > 1.0))


def _haar_levels(S: np.ndarray, J: int, n: int) -> list[np.ndarray]:
    """Coefficients from integrals S over the 2^(J+1) grid of [0,1)^n."""
    levels = [None] * (J + 1)
    cur = S
    for j in range(J, -1, -1):
        if n == 1:
            a, b = cur[0::2], cur[1::2]
            levels[j] = (2.0**j * (a - b))[None, :]
            cur = a + b
        else:
            q00, q01 = cur[0::2, 0::2], cur[0::2, 1::2]
            q10, q11 = cur[1::2, 0::2], cur[1::2, 1::2]
            s = 2.0 ** (2 * j)
            # types (0,1), (1,0), (1,1): psi acts on the axes marked 1
            c01 = s * ((q00 + q10) - (q01 + q11))
            c10 = s * ((q00 + q01) - (q10 + q11))
            c11 = s * ((q00 - q01) - (q10 - q11))
            levels[j] = np.stack([c01, c10, c11])
            cur = q00 + q01 + q10 + q11
    return levels


def haar_analyze(u: TestFunction, J: int, gamma: float, quadrature_points: int = 4) -> CoefficientSequence:
    """All Haar coefficients u^e_I of u with levels 0..J.

    1D piecewise-polynomial members and separable 2D products of them are
    integrated exactly over the finest dyadic cells; other members use
    Gauss-Legendre quadrature on those cells.
    """
    n = u.dimension
    if J < 0 or J > MAX_LEVEL[n]:
        raise ValueError(f"J must lie in [0, {MAX_LEVEL[n]}] for n = {n}")
    if _leaks(u):
        warnings.warn(f"{u.name} is not supported in [0,1)^{n}; coefficients see only its restriction", stacklevel=2)
    N = 2 ** (J + 1)
    exact = True
    if n == 1 and u.poly is not None:
        S = _cell_integrals_1d(u.poly, N)
    elif n == 2 and u.factors is not None:
        f1, f2 = u.factors
        S = np.outer(_cell_integrals_1d(f1, N), _cell_integrals_1d(f2, N))
    else:
        S = _cell_integrals_quadrature(u, N, quadrature_points)
        exact = False
    return CoefficientSequence(n, J, gamma, _haar_levels(S, J, n), u.name, exact)


@dataclass
class SandwichReport:
    weak_l1: float
    tv: float
    l1: float
    weak_ratio: float
    l1_ratio: float
    per_level: list[dict]
    argmax_level: int | None
    pair: str = WAVELET_PAIR

    def as_tuple(self) -> tuple[float, float, float]:
        return self.weak_l1, self.tv, self.l1


def cddd_sandwich(seq: CoefficientSequence, gamma: float | None = None, tv: float = math.nan) -> SandwichReport:
    """Weak-l^1 and l^1 norms of |u^e_I| / l(I)^(1+gamma) under nu~_gamma.

    weak-l^1 is sup_lam lam nu~{a > lam}; over a finite family the sup is
    max_k a_k W_k with W_k the weight of all entries >= a_k. The per-level
    report lists each level's l^1 share and its own weak-l^1 value.
    """
    if gamma is not None and gamma != seq.gamma:
        seq = CoefficientSequence(seq.n, seq.max_level, gamma, seq.levels, seq.function, seq.exact)
    g = seq.gamma
    if -1.0 <= g <= 0.0:
        raise ValueError("gamma must lie outside [-1, 0]")
    vals, wts, lev = [], [], []
    per_level = []
    for j in range(seq.max_level + 1):
        a = seq.scaled(j)
        w = seq.weight(j)
        vals.append(a)
        wts.append(np.full(a.size, w))
        lev.append(np.full(a.size, j))
        per_level.append({"j": j, "l1": float(a.sum() * w), "weak_l1": _weak(a, np.full(a.size, w))[0]})
    a = np.concatenate(vals)
    w = np.concatenate(wts)
    lv = np.concatenate(lev)
    weak, idx = _weak(a, w)
    l1 = float(np.sum(a * w))
    return SandwichReport(
        weak,
        tv,
        l1,
        weak / tv if tv > 0 else math.nan,
        l1 / tv if tv > 0 else math.nan,
        per_level,
        None if idx is None else int(lv[idx]),
    )


def _weak(a: np.ndarray, w: np.ndarray) -> tuple[float, int | None]:
    keep = a > 0
    if not np.any(keep):
        return 0.0, None
    pos = np.flatnonzero(keep)
    order = pos[np.argsort(-a[pos], kind="stable")]
    av, cw = a[order], np.cumsum(w[order])
    # ties: the mass above lam -> a_k^- includes every entry equal to a_k
    last = np.searchsorted(-av, -av, side="right") - 1
    vals = av * cw[last]
    i = int(np.argmax(vals))
    return float(vals[i]), int(order[i])
