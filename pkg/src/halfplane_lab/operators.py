"""Maximal functions, positive operators and stopping-time decompositions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .fields import (DEFAULT_SPEC, INF, BorelMeasure, LogSingular, QuadratureSpec, ScalarField, _jacobi,
                     _legendre, box_integrals, from_callable, integrate_rect_generic, log_box_integral, product,
                     total_integral)
from .geometry import (DyadicInterval, ScaleWindow, as_shift, box_measure_alpha, boxes_containing,
                       chain_arrays)
from .orlicz import YoungFunction, luxembourg_norm


class DegenerateBox(ArithmeticError):
    """A box with zero weighted measure carries a nonzero integral."""


class WindowTooSmall(RuntimeError):
    """A top-scale average already exceeds the threshold, so maximality is not certified."""


@dataclass(frozen=True)
class Params:
    """Exponents ``p, q``, weight parameter ``alpha`` and fractional order ``gamma``."""

    p: float = 2.0
    q: float = 2.0
    alpha: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.alpha > -1:
            raise ValueError("alpha must exceed -1")
        if not 0 <= self.gamma < 2 + self.alpha:
            raise ValueError("gamma must lie in [0, 2 + alpha)")
        if self.p < 1:
            raise ValueError("p must be at least 1")

    @property
    def d(self) -> float:
        """Homogeneity ``2 + alpha - gamma`` of the fractional averages."""
        return 2.0 + self.alpha - self.gamma

    @property
    def pp(self) -> float:
        return INF if self.p == 1 else self.p / (self.p - 1)

    @property
    def theta(self) -> float:
        """``1 - gamma / (2 + alpha)``."""
        return 1.0 - self.gamma / (2.0 + self.alpha)

    @classmethod
    def critical(cls, p: float, alpha: float, gamma: float) -> "Params":
        """Params with ``1/q = 1/p - gamma/(2+alpha)``."""
        inv = 1.0 / p - gamma / (2.0 + alpha)
        if inv <= 0:
            raise ValueError("p must be below (2 + alpha) / gamma")
        return cls(p, 1.0 / inv, alpha, gamma)

    def assert_critical(self, tol: float = 1e-12) -> None:
        if abs(1.0 / self.q - (1.0 / self.p - self.gamma / (2.0 + self.alpha))) > tol:
            raise ValueError("1/q = 1/p - gamma/(2+alpha) does not hold")

    def level_constant(self) -> float:
        """``C_{alpha,gamma} = 2**d * (1 + 2**(2d))`` of the level-set embedding."""
        return 2.0 ** self.d * (1.0 + 2.0 ** (2.0 * self.d))

    def strong_constant(self) -> float:
        """``((1 + p'/q) C_{alpha,gamma})**(1 - gamma/(2+alpha))``."""
        return ((1.0 + self.pp / self.q) * self.level_constant()) ** self.theta

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "alpha": self.alpha, "gamma": self.gamma}


# ---------------------------------------------------------------------------
# chains


def _chain(z: complex, beta, window: ScaleWindow):
    chain = boxes_containing(z, beta, window)
    left = np.array([float(i.left) for i in chain])
    length = np.array([2.0 ** i.j for i in chain])
    return chain, left, length


def _normalizer(length, P: Params, sigma_mass=None, normalization: str = "length"):
    if normalization == "length":
        return length ** P.d
    if normalization == "alpha":
        return (length ** (2.0 + P.alpha) / (1.0 + P.alpha)) ** P.theta
    if normalization == "sigma":
        return np.asarray(sigma_mass, dtype=float) ** P.theta
    raise ValueError(f"unknown normalization {normalization!r}")


def _safe_ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    bad = (den <= 0) & (num > 0)
    if np.any(bad):
        raise DegenerateBox("weighted box measure vanishes under a nonzero integral")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def dyadic_fractional_maximal(f: ScalarField, P: Params, beta, z: complex, window: ScaleWindow,
                              spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``M^{d,beta}_{alpha,gamma} f(z)``: max over the chain of ``|I|**-(2+alpha-gamma) int_{Q_I} f``."""
    _, left, length = _chain(z, beta, window)
    if left.size == 0 or f.is_zero:
        return 0.0
    return float(np.max(box_integrals(f, left, length, P.alpha, spec) / length ** P.d))


def dyadic_maximal_points(f: ScalarField, P: Params, beta, x, y, window: ScaleWindow,
                          spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Vectorized ``M^{d,beta}`` at points ``x + iy``; each distinct box is integrated once."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    js, left, mask = chain_arrays(x, y, beta, window)
    out = np.zeros(x.shape)
    if not mask.any() or f.is_zero:
        return out
    h = 2.0 ** js
    key = np.stack([js[mask], np.round(left[mask] / h[mask] * 3.0).astype(np.int64)], axis=1)
    uniq, idx, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    L = h[mask][idx]
    vals = box_integrals(f, left[mask][idx], L, P.alpha, spec) / L ** P.d
    full = np.zeros(left.shape)
    full[mask] = vals[inv.ravel()]
    return full.max(axis=1)


def weighted_fractional_maximal(f: ScalarField, sigma: ScalarField, P: Params, beta, z: complex,
                                window: ScaleWindow, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``M^{d,beta}_{sigma,alpha,gamma} f(z)`` with 0/0 averages read as 0."""
    _, left, length = _chain(z, beta, window)
    if left.size == 0 or f.is_zero:
        return 0.0
    num = box_integrals(product(f, sigma), left, length, P.alpha, spec)
    den = box_integrals(sigma, left, length, P.alpha, spec) ** P.theta
    return float(np.max(_safe_ratio(num, den)))


def exp_maximal(f: ScalarField, alpha: float, z: complex, window: ScaleWindow, beta=0,
                spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``max_chain exp(avg_{Q_I} log f)``; boxes where ``log f`` is not integrable contribute 0."""
    chain, _, _ = _chain(z, beta, window)
    best = 0.0
    for I in chain:
        try:
            v = log_box_integral(f, I, alpha, spec) / box_measure_alpha(2.0 ** I.j, alpha)
        except LogSingular:
            continue
        best = max(best, math.exp(v))
    return best


def orlicz_maximal(f: ScalarField, phi: YoungFunction, alpha: float, z: complex, window: ScaleWindow,
                   beta=0, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``max_chain ||f||_{Q_I, phi, alpha}``."""
    chain, _, _ = _chain(z, beta, window)
    return max((luxembourg_norm(f, I, phi, alpha, spec) for I in chain), default=0.0)


# ---------------------------------------------------------------------------
# non-dyadic bracket


def _lattice_lower(f: ScalarField, P: Params, x, y, Lmax: float, density: Tuple[int, int],
                   spec: QuadratureSpec):
    """Max of fractional averages over the z-relative lattice and its largest length."""
    dl, dx = density
    shrink = 1.0 - 1.0 / dx
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    l0 = y / shrink
    K = np.maximum(np.floor(dl * np.log2(Lmax / l0)).astype(int), 0)
    kmax = int(K.max()) if K.size else 0
    k = np.arange(kmax + 1)
    ell = l0[:, None] * 2.0 ** (k[None, :] / dl)                    # (n, K)
    valid = k[None, :] <= K[:, None]
    i = np.arange(dx)
    lefts = x[:, None, None] - ell[:, :, None] * (i[None, None, :] / dx)
    lens = np.broadcast_to(ell[:, :, None], lefts.shape)
    vals = box_integrals(f, lefts, lens, P.alpha, spec) / lens ** P.d
    vals = np.where(valid[:, :, None], vals, 0.0)
    ell_top = l0 * 2.0 ** (K / dl)
    return vals.max(axis=(1, 2)), ell_top


def bracket_points(f: ScalarField, P: Params, x, y, window: ScaleWindow, density: Tuple[int, int] = (4, 8),
                   spec: QuadratureSpec = DEFAULT_SPEC, chunk: int = 256):
    """Vectorized ``(lower, upper)`` bracket of the full maximal function ``M_{alpha,gamma} f``.

    ``lower`` maximizes over a lattice of intervals containing ``x`` (lengths
    ``y/(1-1/dx) * 2**(k/dl)``, left ends ``x - i*len/dx``) and over both dyadic
    chains.  Every interval ``I`` whose box holds ``z`` sits inside a lattice
    interval at most ``2**(1/dl)/(1-1/dx)`` times longer, which yields the
    certified upper bound ``rho * lower``; intervals beyond the largest lattice
    length are bounded by ``int f / len**d``.  The covering-lemma bound
    ``6**d * sum_beta M^{d,beta}`` is used when it is smaller and consistent.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if f.is_zero:
        return np.zeros(x.shape), np.zeros(x.shape)
    dl, dx = density
    shrink = 1.0 - 1.0 / dx
    rho = (2.0 ** (1.0 / dl) / shrink) ** P.d
    Lmax = 2.0 ** window.j_max
    try:
        total = total_integral(f, P.alpha, spec)
    except Exception:
        total = INF
    lower = np.empty(x.shape)
    ltop = np.empty(x.shape)
    for s in range(0, x.size, chunk):
        lower[s:s + chunk], ltop[s:s + chunk] = _lattice_lower(f, P, x[s:s + chunk], y[s:s + chunk], Lmax,
                                                               density, spec)
    dyad = [dyadic_maximal_points(f, P, b, x, y, window, spec) for b in (0, "1/3")]
    lower = np.maximum(lower, np.maximum(dyad[0], dyad[1]))
    lattice_upper = np.maximum(rho * lower, total / (ltop * shrink) ** P.d)
    dyadic_upper = 6.0 ** P.d * (dyad[0] + dyad[1])
    upper = np.where(dyadic_upper >= lower, np.minimum(dyadic_upper, lattice_upper), lattice_upper)
    return lower, upper


def fractional_maximal_bracket(f: ScalarField, P: Params, z: complex, window: ScaleWindow,
                               lattice: Tuple[int, int] = (4, 8), spec: QuadratureSpec = DEFAULT_SPEC):
    """``(lower, upper)`` bracket of ``M_{alpha,gamma} f(z)``; see :func:`bracket_points`."""
    lo, up = bracket_points(f, P, [z.real], [z.imag], window, lattice, spec)
    return float(lo[0]), float(up[0])


def dyadic_bracket_upper(f: ScalarField, P: Params, z: complex, window: ScaleWindow,
                         spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Covering-lemma majorant ``6**d * sum_beta M^{d,beta} f(z)``."""
    return 6.0 ** P.d * sum(dyadic_fractional_maximal(f, P, b, z, window, spec) for b in (0, "1/3"))


# ---------------------------------------------------------------------------
# positive operators


def bergman_positive(f: ScalarField, P: Params, z: complex, window: Optional[ScaleWindow] = None,
                     spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-9)) -> float:
    """``T_{alpha,gamma} f(z) = int f(w) |z - conj(w)|**-(2+alpha-gamma) dV_alpha(w)``.

    The support rectangle of ``f`` (or the window region) is split at ``Re z``
    and integrated with the strip engine; the kernel is bounded by
    ``(Im z)**-(2+alpha-gamma)`` so every cell is smooth.
    """
    if f.is_zero:
        return 0.0
    b = f.support_bounds()
    if f.piecewise_constant and all(np.isfinite(b)):
        return _bergman_cells(f, P, z)
    if b is None or not all(np.isfinite(b)):
        if window is None:
            raise ValueError("non-compact f needs a window")
        b = (window.x_lo, window.x_hi, 0.0, 2.0 ** window.j_max)
    x, y = z.real, z.imag
    e = -0.5 * P.d
    bx, by = f._breaks()
    g = from_callable(lambda u, v: f(u, v) * ((x - u) ** 2 + (y + v) ** 2) ** e,
                      tuple(bx) + (x,), by, "bergman_integrand")
    return integrate_rect_generic(g, b[0], b[1], 0.0, b[3], P.alpha, spec)[0]


def _geometric_breaks(lo: float, hi: float, c: float, h: float) -> np.ndarray:
    """``[lo, hi]`` split at ``c`` and at ``c +- h * 2**k``."""
    k = np.arange(0, 64)
    pts = np.concatenate([[lo, hi, c], c + h * 2.0 ** k, c - h * 2.0 ** k])
    return np.unique(pts[(pts >= lo) & (pts <= hi)])


def _bergman_cells(f: ScalarField, P: Params, z: complex, n: int = 8) -> float:
    """Bergman-type integral of a piecewise-constant field.

    Each cell is cut geometrically around ``(Re z, 0)`` at the scale ``Im z``,
    where the kernel varies, and every piece gets an ``n x n`` Gauss rule
    (Gauss-Jacobi for ``v**alpha`` on pieces touching ``v = 0``).
    """
    x, y = z.real, z.imag
    e = -0.5 * P.d
    a = P.alpha
    xl, wl = _legendre(n)
    xj, wj = _jacobi(n, a, True)
    total = 0.0
    for c in f.cells():
        ub = _geometric_breaks(c.x0, c.x1, x, y)
        vb = _geometric_breaks(c.y0, c.y1, -y, y)
        u0, u1 = ub[:-1], ub[1:]
        U = 0.5 * (u0 + u1)[:, None] + 0.5 * (u1 - u0)[:, None] * xl[None, :]
        WU = (0.5 * (u1 - u0)[:, None] * wl[None, :]).ravel()
        U = U.ravel()
        v0, v1 = vb[:-1], vb[1:]
        h = 0.5 * (v1 - v0)
        V = 0.5 * (v0 + v1)[:, None] + h[:, None] * xl[None, :]
        WV = h[:, None] * wl[None, :] * np.abs(V) ** a
        if v0[0] == 0.0:
            V[0] = h[0] * (xj + 1.0)
            WV[0] = h[0] ** (1.0 + a) * wj
        V, WV = V.ravel(), WV.ravel()
        K = ((x - U)[:, None] ** 2 + (y + V)[None, :] ** 2) ** e
        total += c.coef * float(WU @ K @ WV)
    return total


def dyadic_positive_operator(f: ScalarField, P: Params, beta, z: complex, window: ScaleWindow,
                             spec: QuadratureSpec = DEFAULT_SPEC, with_tail: bool = False, tail_tol: float = 1e-3):
    """``Q^beta_{alpha,gamma} f(z)``: the chain sum of ``|I|**-(2+alpha-gamma) int_{Q_I} f``.

    With ``with_tail`` returns ``(value, flag)``; the flag is set when the
    largest-scale term exceeds ``tail_tol`` of the sum.
    """
    _, left, length = _chain(z, beta, window)
    if left.size == 0 or f.is_zero:
        return (0.0, False) if with_tail else 0.0
    terms = box_integrals(f, left, length, P.alpha, spec) / length ** P.d
    val = float(terms.sum())
    if with_tail:
        return val, bool(val > 0 and terms[-1] > tail_tol * val)
    return val


# ---------------------------------------------------------------------------
# window trees and stopping families


@dataclass(frozen=True)
class WindowTree:
    """All grid intervals of a window, coarse scales first, with parent links."""

    nodes: Tuple[DyadicInterval, ...]
    j: np.ndarray
    left: np.ndarray
    length: np.ndarray
    parent: np.ndarray
    window: ScaleWindow
    beta: object


@lru_cache(maxsize=64)
def window_tree(window: ScaleWindow, beta=0) -> WindowTree:
    beta = as_shift(beta)
    nodes = window.intervals(beta)
    index = {(I.j, I.m): k for k, I in enumerate(nodes)}
    parent = np.full(len(nodes), -1, dtype=int)
    for k, I in enumerate(nodes):
        if I.j < window.j_max:
            P = I.parent()
            parent[k] = index[(P.j, P.m)]
    j = np.array([I.j for I in nodes])
    left = np.array([float(I.left) for I in nodes])
    return WindowTree(tuple(nodes), j, left, 2.0 ** j, parent, window, beta)


@dataclass(frozen=True)
class FractionalAverages:
    """Per-node fractional averages with the running maximum over strict ancestors.

    ``chain_max`` is the value of the windowed dyadic maximal function on the
    top half ``T_I`` of every node.
    """

    tree: WindowTree
    avg: np.ndarray
    anc: np.ndarray
    integral: np.ndarray

    @property
    def chain_max(self) -> np.ndarray:
        return np.maximum(self.avg, self.anc)

    def stopping_mask(self, lam: float) -> np.ndarray:
        return (self.avg > lam) & (self.anc <= lam)

    def superlevel(self, lams, box_mass: np.ndarray) -> np.ndarray:
        """``mu({M > lam})`` for each ``lam`` from per-node box masses ``mu(Q_I)``."""
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        mask = (self.avg[None, :] > lams[:, None]) & (self.anc[None, :] <= lams[:, None])
        return mask.astype(float) @ box_mass


def fractional_averages(f: ScalarField, P: Params, beta, window: ScaleWindow, sigma: Optional[ScalarField] = None,
                        normalization: Optional[str] = None, spec: QuadratureSpec = DEFAULT_SPEC) -> FractionalAverages:
    """Averages ``int_{Q_I} f sigma / N(I)`` over every window node.

    ``normalization`` is ``"length"`` (``|I|**d``), ``"alpha"``
    (``|Q_I|_alpha**(1-gamma/(2+alpha))``) or ``"sigma"`` (the same power of
    ``|Q_I|_{sigma,alpha}``); the default is ``"sigma"`` when ``sigma`` is
    given and ``"alpha"`` otherwise.
    """
    tree = window_tree(window, beta)
    if normalization is None:
        normalization = "sigma" if sigma is not None else "alpha"
    g = f if sigma is None else product(f, sigma)
    num = box_integrals(g, tree.left, tree.length, P.alpha, spec)
    mass = None
    if normalization == "sigma":
        mass = box_integrals(sigma, tree.left, tree.length, P.alpha, spec) if sigma is not None else \
            tree.length ** (2.0 + P.alpha) / (1.0 + P.alpha)
    avg = _safe_ratio(num, _normalizer(tree.length, P, mass, normalization))
    anc = np.zeros(avg.shape)
    for k in range(len(avg)):
        par = tree.parent[k]
        if par >= 0:
            anc[k] = max(anc[par], avg[par])
    return FractionalAverages(tree, avg, anc, num)


@dataclass(frozen=True)
class StoppingFamily:
    """Maximal intervals whose fractional average exceeds ``lam``."""

    intervals: Tuple[DyadicInterval, ...]
    averages: Tuple[float, ...]
    lam: float
    a: float

    def __len__(self):
        return len(self.intervals)

    def is_maximal(self) -> bool:
        return not any(I != J and J.contains(I) for I in self.intervals for J in self.intervals)


def stopping_intervals(f: ScalarField, P: Params, beta, lam: float, window: ScaleWindow,
                       spec: QuadratureSpec = DEFAULT_SPEC, sigma: Optional[ScalarField] = None,
                       normalization: Optional[str] = None, a: Optional[float] = None,
                       averages: Optional[FractionalAverages] = None) -> StoppingFamily:
    """Top-down stopping family for the threshold ``lam``.

    Raises :class:`WindowTooSmall` if a top-scale average exceeds ``lam``.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    fa = averages or fractional_averages(f, P, beta, window, sigma, normalization, spec)
    top = fa.tree.j == window.j_max
    if np.any(fa.avg[top] > lam):
        raise WindowTooSmall(f"a top-scale average exceeds lam = {lam}")
    idx = np.nonzero(fa.stopping_mask(lam))[0]
    return StoppingFamily(tuple(fa.tree.nodes[k] for k in idx), tuple(float(fa.avg[k]) for k in idx), float(lam),
                          2.0 ** P.d if a is None else float(a))


def superlevel_measure(f: ScalarField, P: Params, beta, lam: float, mu: BorelMeasure, window: ScaleWindow,
                       spec: QuadratureSpec = DEFAULT_SPEC, sigma: Optional[ScalarField] = None,
                       normalization: Optional[str] = None) -> float:
    """``mu`` of the union of the stopping boxes; the boxes have disjoint bases so their measures add."""
    fam = stopping_intervals(f, P, beta, lam, window, spec, sigma, normalization)
    if not fam.intervals:
        return 0.0
    left = np.array([float(I.left) for I in fam.intervals])
    length = np.array([2.0 ** I.j for I in fam.intervals])
    return float(mu.boxes(left, length, spec).sum())


def maximal_lq_exact(fa: FractionalAverages, mu: BorelMeasure, q: float,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``||M||_{L^q(mu)}`` for a windowed dyadic maximal function, band by band.

    ``M`` is constant on each top half ``T_I`` (value ``chain_max``); below
    the finest scale it keeps the finest node's value.
    """
    t = fa.tree
    cm = fa.chain_max
    tops = mu.rects(t.left, t.left + t.length, t.length / 2, t.length, spec)
    total = float(np.dot(cm ** q, tops))
    fine = t.j == t.window.j_min
    strip = mu.rects(t.left[fine], t.left[fine] + t.length[fine], 0.0, t.length[fine] / 2, spec)
    total += float(np.dot(cm[fine] ** q, strip))
    return total ** (1.0 / q)


def maximal_lq_layer_cake(fa: FractionalAverages, mu: BorelMeasure, q: float, ratio: float = 2.0 ** 0.125,
                          spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``||M||_{L^q(mu)}`` from ``q int lam**(q-1) mu(M > lam) dlam`` on a geometric grid.

    The grid starts at the maximum value and ``mu(M > lam)`` is sampled at the
    geometric midpoint of each cell, so jumps on grid points are integrated exactly.
    """
    cm = fa.chain_max
    pos = cm[cm > 0]
    if pos.size == 0:
        return 0.0
    hi, lo = float(pos.max()), float(pos.min())
    n = int(math.ceil(math.log(hi / lo) / math.log(ratio))) + 1
    lams = hi * ratio ** (-np.arange(n + 1, dtype=float))
    mids = lams[:-1] / math.sqrt(ratio)
    mass = mu.boxes(fa.tree.left, fa.tree.length, spec)
    F = fa.superlevel(np.concatenate([mids, lams[-1:]]), mass)
    lq = lams ** q
    total = float(np.dot(lq[:-1] - lq[1:], F[:-1])) + lq[-1] * F[-1]
    return total ** (1.0 / q)
