"""Young functions, complementary functions and Luxembourg norms on Carleson boxes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .fields import (DEFAULT_SPEC, INF, NonConvergent, QuadratureSpec, ScalarField, _legendre, _split,
                     box_indicator,
                     integrate_box, product, term_rect_integral)
from .geometry import IntervalLike, box_measure_alpha, float_bounds

# Extended value +inf is stored as a large finite number so that sums and
# products of saturated values stay ordered instead of producing nan.
SENTINEL = 1e300

_PROBE = np.concatenate([[0.0], np.logspace(-12, 12, 2401)])


class Unbounded(ArithmeticError):
    """The supremum defining a complementary function diverges everywhere."""


class Inconclusive(RuntimeError):
    """A numeric test landed too close to its decision boundary."""


class InvalidYoung(ValueError):
    """The sampled function is not a Young function."""


@dataclass(frozen=True, eq=False)
class YoungFunction:
    """Convex increasing ``phi`` with ``phi(0) = 0``.

    ``exponent`` is the exact growth exponent for power kinds and ``conj``
    the closed-form complementary function when one is known.
    """

    raw: Callable[[np.ndarray], np.ndarray]
    kind: str = "generic"
    params: tuple = ()
    conj: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exponent: Optional[float] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.asarray(self.raw(t), dtype=float)
        v = np.where(np.isnan(v), SENTINEL, v)
        return np.minimum(v, SENTINEL)

    def validate(self, lo: float = 1e-6, hi: float = 1e6, n: int = 400) -> "YoungFunction":
        """Sampling checks: ``phi(0) = 0``, monotone, midpoint convex, divergent."""
        if float(self(np.array([0.0]))[0]) != 0.0:
            raise InvalidYoung("phi(0) must be 0")
        t = np.logspace(math.log10(lo), math.log10(hi), n)
        v = self(t)
        if np.any(v < 0) or np.any(np.diff(v) < -1e-12 * np.abs(v[1:])):
            raise InvalidYoung("phi must be nonnegative and nondecreasing")
        a, c = t[:-2], t[2:]
        va, vc = v[:-2], v[2:]
        vm = self(0.5 * (a + c))
        ok = (va >= SENTINEL) | (vc >= SENTINEL) | (vm <= 0.5 * (va + vc) * (1 + 1e-9) + 1e-300)
        if not np.all(ok):
            raise InvalidYoung("phi fails the midpoint convexity test")
        if not v[-1] > v[n // 2]:
            raise InvalidYoung("phi must grow without bound")
        return self

    def describe(self):
        return {"kind": self.kind, "params": list(self.params)}


def power(p: float, c: float = 1.0) -> YoungFunction:
    """``phi(t) = c * t**p`` with ``p >= 1``."""
    if p < 1:
        raise InvalidYoung("power Young functions need p >= 1")
    if p == 1:
        conj = lambda s: np.where(np.asarray(s) <= c, 0.0, SENTINEL)
    else:
        pp = p / (p - 1)
        conj = lambda s: (p - 1) * c * (np.asarray(s) / (c * p)) ** pp
    return YoungFunction(lambda t: c * t ** p, "power", (p, c), conj, float(p))


def power_conjugate_bump(p: float, r: float) -> YoungFunction:
    """``phi(t) = t**((p' r)')``, the power bump of the corollaries."""
    pp = p / (p - 1)
    k = pp * r / (pp * r - 1)
    f = power(k)
    return YoungFunction(f.raw, "power_bump", (p, r), f.conj, k)


def power_log(p: float, k: float) -> YoungFunction:
    """``phi(t) = t**p * log(e + t)**k``."""
    return YoungFunction(lambda t: t ** p * np.log(np.e + t) ** k, "power_log", (p, k)).validate()


def exponential() -> YoungFunction:
    return YoungFunction(lambda t: np.expm1(t), "exponential", ())


def tabulated(ts: Sequence[float], values: Sequence[float]) -> YoungFunction:
    """Log-linear interpolation of ``(t, phi(t))`` pairs, power-law extrapolation at both ends."""
    lt = np.log(np.asarray(ts, dtype=float))
    lv = np.log(np.asarray(values, dtype=float))
    s0 = (lv[1] - lv[0]) / (lt[1] - lt[0])
    s1 = (lv[-1] - lv[-2]) / (lt[-1] - lt[-2])

    def raw(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            x = np.log(t)
        y = np.interp(x, lt, lv)
        y = np.where(x < lt[0], lv[0] + s0 * (x - lt[0]), y)
        y = np.where(x > lt[-1], lv[-1] + s1 * (x - lt[-1]), y)
        return np.where(t > 0, np.exp(y), 0.0)

    return YoungFunction(raw, "tabulated", (tuple(ts), tuple(values))).validate()


def generic(fn: Callable, name: str = "generic") -> YoungFunction:
    return YoungFunction(fn, name, ()).validate()


def _golden_max(fun, lo, hi, iters=90):
    """Vectorized golden-section maximization of concave ``fun`` on ``[lo, hi]``."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo.copy(), hi.copy()
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + g * (b - a))
        c_new = np.where(left, b - g * (b - a), d)
        fc_old, fd_old = fc, fd
        fd = np.where(left, fc_old, fun(d_new))
        fc = np.where(left, fun(c_new), fd_old)
        c, d = c_new, d_new
    return np.maximum(fc, fd)


def _legendre_values(phi: YoungFunction, s: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """``sup_t (t s - phi(t))`` over ``grid`` with golden refinement."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty(s.shape)
    pv = phi(grid)
    for lo in range(0, s.size, 512):
        ss = s[lo:lo + 512]
        M = ss[:, None] * grid[None, :] - pv[None, :]
        k = np.argmax(M, axis=1)
        best = M[np.arange(ss.size), k]
        unbounded = (k == grid.size - 1) & (M[:, -1] > M[:, -2])
        a = grid[np.maximum(k - 1, 0)]
        b = grid[np.minimum(k + 1, grid.size - 1)]
        fun = lambda t, ss=ss: ss * t - phi(t)
        ref = _golden_max(fun, a, b)
        val = np.maximum(best, ref)
        out[lo:lo + 512] = np.where(unbounded, SENTINEL, np.maximum(val, 0.0))
    return out


def complementary(phi: YoungFunction, t_grid: Optional[np.ndarray] = None) -> YoungFunction:
    """``psi(s) = sup_t (t s - phi(t))``.

    Power kinds use the closed form; otherwise the supremum is taken over a
    log-spaced probe grid and refined by golden-section search.
    """
    if phi.conj is not None:
        pw = phi.exponent
        exp = None if pw is None or pw == 1 else pw / (pw - 1)
        return YoungFunction(phi.conj, "complementary", (phi.describe(),), phi.raw, exp)
    grid = _PROBE if t_grid is None else np.concatenate([[0.0], np.asarray(t_grid, dtype=float)])
    if _legendre_values(phi, np.array([1e-8]), grid)[0] >= SENTINEL:
        raise Unbounded("complementary function is infinite near 0; phi is not a Young function")
    psi = YoungFunction(lambda s: _legendre_values(phi, s, grid), "complementary", (phi.describe(),), phi.raw)
    return psi


def check_delta2(phi: YoungFunction, t_lo: float = 1e-6, t_hi: float = 1e6, n: int = 400) -> Tuple[bool, float]:
    """``K = sup phi(2t) / phi(t)`` on a probe grid; stable under refinement and range growth."""

    def ratio(lo, hi, m):
        t = np.logspace(math.log10(lo), math.log10(hi), m)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            a = np.asarray(phi.raw(t), dtype=float)
            b = np.asarray(phi.raw(2 * t), dtype=float)
            r = b / a
        r = np.where(~np.isfinite(b) | (b >= SENTINEL), INF, r)
        r = np.where(a > 0, r, np.where(b > 0, INF, 1.0))
        return float(np.max(r))

    K = ratio(t_lo, t_hi, n)
    K2 = ratio(t_lo / 10, t_hi * 10, 2 * n)
    holds = math.isfinite(K2) and K2 <= K * (1 + 1e-3) + 1e-12
    return holds, K2


def check_Bp(phi: YoungFunction, p: float, c: float = 1.0, T: float = 1e6) -> Tuple[bool, float]:
    """Decide ``int_c^inf phi(t) t**(-p) dt/t < inf`` together with Delta_2.

    Power kinds are decided from their exact exponent.  Otherwise the tail
    exponent is fitted on the last decade below ``T``; a fit within 0.05 of
    ``p`` raises :class:`Inconclusive`.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    d2, _ = check_delta2(phi)
    if phi.exponent is not None and phi.kind in ("power", "power_bump"):
        k = phi.exponent
        if k >= p:
            return False, INF
        coef = phi.params[1] if phi.kind == "power" else 1.0
        return d2, coef * c ** (k - p) / (p - k)
    body = quad(lambda u: float(phi(np.array([math.exp(u)]))[0]) * math.exp(-p * u),
                math.log(c), math.log(T), epsabs=0, epsrel=1e-10, limit=400)[0]
    vT, vT10 = (float(v) for v in phi(np.array([T, T / 10])))
    if vT >= SENTINEL or vT10 <= 0:
        return False, INF
    k = math.log(vT / vT10) / math.log(10.0)
    if abs(k - p) <= 0.05:
        raise Inconclusive(f"fitted tail exponent {k:.4f} is within 0.05 of p = {p}")
    if k > p:
        return False, INF
    tail = vT * T ** (-p) / (p - k)
    return d2, body + tail


# ---------------------------------------------------------------------------
# Luxembourg norms


def _box_rule(f: ScalarField, interval: IntervalLike, alpha: float, spec: QuadratureSpec):
    """Nodes and ``dV_alpha`` weights discretizing ``Q_I`` for a generic field."""
    a, b = float_bounds(interval)
    L = b - a
    n = spec.nodes_per_axis
    x, w = _legendre(n)
    bx, by = f._breaks()
    xs_all, ys_all, ws_all = [], [], []
    top = L
    frac = 1.0 - 2.0 ** (-(1.0 + alpha))
    k = 0
    while True:
        lo = top / 2
        for ylo, yhi in _split(lo, top, by):
            for xa, xb in _split(a, b, bx):
                xs = xa + 0.5 * (xb - xa) * (x + 1)
                ys = ylo + 0.5 * (yhi - ylo) * (x + 1)
                X, Y = np.meshgrid(xs, ys, indexing="ij")
                W = 0.25 * (xb - xa) * (yhi - ylo) * np.outer(w, w) * Y ** alpha
                xs_all.append(X.ravel())
                ys_all.append(Y.ravel())
                ws_all.append(W.ravel())
        k += 1
        # remaining mass fraction below this strip
        if 2.0 ** (-k * (1.0 + alpha)) < 1e-14 or k >= spec.max_depth:
            break
        top = lo
    return np.concatenate(xs_all), np.concatenate(ys_all), np.concatenate(ws_all)


def _phi_average(f: ScalarField, interval: IntervalLike, phi: YoungFunction, alpha: float,
                 spec: QuadratureSpec) -> Callable[[float], float]:
    """Return ``lam -> |Q_I|^{-1} int_{Q_I} phi(f / lam) dV_alpha``."""
    a, b = float_bounds(interval)
    L = b - a
    Q = box_measure_alpha(L, alpha)
    if f.piecewise_constant:
        vals, meas = [], []
        for t in product(f, box_indicator(a, b)).cells():
            m, _ = term_rect_integral(replace(t, coef=1.0), a, b, 0.0, L, alpha)
            if m > 0:
                vals.append(t.coef)
                meas.append(m)
        vals = np.array(vals)
        meas = np.array(meas) / Q
        return lambda lam: float(np.dot(meas, phi(vals / lam)))
    if f.exact and len(f.terms) == 1 and phi.kind in ("power", "power_bump"):
        pw = phi.exponent
        coef = phi.params[1] if phi.kind == "power" else 1.0
        mom = integrate_box(f.power(pw), (a, b), alpha, spec)[0] / Q
        return lambda lam: coef * mom * lam ** (-pw)
    X, Y, W = _box_rule(f, (a, b), alpha, spec)
    V = f(X, Y)
    W = W / Q
    return lambda lam: float(np.dot(W, phi(V / lam)))


def luxembourg_norm(f: ScalarField, interval: IntervalLike, phi: YoungFunction, alpha: float,
                    spec: QuadratureSpec = DEFAULT_SPEC, rel_tol: float = 1e-12) -> float:
    """``inf{lam > 0 : avg_{Q_I} phi(f / lam) <= 1}`` by bisection on ``log lam``."""
    if f.is_zero:
        return 0.0
    G = _phi_average(f, interval, phi, alpha, spec)
    hi = 1.0
    if G(hi) <= 1.0:
        while G(hi / 2) <= 1.0:
            hi /= 2
            if hi < 1e-300:
                return 0.0
        lo = hi / 2
    else:
        lo = hi
        while G(hi) > 1.0:
            lo = hi
            hi *= 2
            if hi > 1e300:
                raise NonConvergent("Luxembourg norm is infinite")
    while hi / lo - 1.0 > rel_tol:
        mid = lo * math.sqrt(hi / lo)
        if G(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def holder_check(f: ScalarField, g: ScalarField, interval: IntervalLike, phi: YoungFunction, alpha: float,
                 spec: QuadratureSpec = DEFAULT_SPEC, constant: float = 2.0, tol: float = 1e-9,
                 psi: Optional[YoungFunction] = None):
    """Generalized Hoelder inequality on a box.

    Returns ``(lhs, rhs, holds)`` with ``lhs = avg(f g)`` and
    ``rhs = ||f||_phi ||g||_psi``; ``holds`` tests ``lhs <= constant * rhs``.
    The Luxembourg-norm form of the inequality needs ``constant = 2`` in
    general (``f = g = 1`` with ``phi(t) = t**2`` gives ``lhs = 2 rhs``).
    """
    a, b = float_bounds(interval)
    Q = box_measure_alpha(b - a, alpha)
    lhs = integrate_box(product(f, g), (a, b), alpha, spec)[0] / Q
    psi = psi or complementary(phi)
    rhs = luxembourg_norm(f, (a, b), phi, alpha, spec) * luxembourg_norm(g, (a, b), psi, alpha, spec)
    return lhs, rhs, bool(lhs <= constant * rhs * (1 + tol))
