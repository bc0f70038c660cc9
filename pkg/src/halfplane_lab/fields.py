"""Nonnegative fields on the upper half-plane and quadrature of ``f dV_alpha``.

A :class:`ScalarField` is either a finite sum of *terms*

    c * y**t * |z|**s * 1[x0 <= x < x1, y0 <= y < y1] * 1[|z| <= R]

for which integrals over rectangles are computed semi-analytically, or a
generic vectorized callable integrated by the strip engine.  The strip
engine splits ``Q_I`` into horizontal strips ``[2**-(k+1) L, 2**-k L)``,
applies an adaptive tensor Gauss-Legendre rule on each strip and
extrapolates the geometric tail toward ``y = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_jacobi, roots_legendre

from .geometry import IntervalLike, ScaleWindow, float_bounds, interval_endpoints

INF = math.inf


class NonConvergent(RuntimeError):
    """Quadrature reached its depth budget without meeting the tolerance."""


class DomainError(ValueError):
    """Parameters outside the admissible range (for example ``alpha <= -1``)."""


class LogSingular(ArithmeticError):
    """The box average of ``log f`` diverges to minus infinity."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-300
    max_depth: int = 200
    nodes_per_axis: int = 12

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.nodes_per_axis < 2:
            raise ValueError("nodes_per_axis must be at least 2")


DEFAULT_SPEC = QuadratureSpec()


def _check_alpha(alpha: float) -> None:
    if not alpha > -1:
        raise DomainError(f"alpha must exceed -1, got {alpha}")


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Term:
    coef: float
    t: float = 0.0
    s: float = 0.0
    x0: float = -INF
    x1: float = INF
    y0: float = 0.0
    y1: float = INF
    R: float = INF

    @property
    def radial(self) -> bool:
        return self.s != 0.0 or self.R < INF

    @property
    def piecewise_constant(self) -> bool:
        return self.t == 0.0 and not self.radial

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        val = np.full(np.broadcast(x, y).shape, self.coef, dtype=float)
        if self.t != 0.0:
            val = val * y ** self.t
        r2 = x * x + y * y
        if self.s != 0.0:
            with np.errstate(divide="ignore"):
                val = val * r2 ** (0.5 * self.s)
        inside = (x >= self.x0) & (x < self.x1) & (y >= self.y0) & (y < self.y1)
        if self.R < INF:
            inside &= r2 <= self.R * self.R
        return np.where(inside, val, 0.0)

    def times(self, other: "Term") -> Optional["Term"]:
        x0, x1 = max(self.x0, other.x0), min(self.x1, other.x1)
        y0, y1 = max(self.y0, other.y0), min(self.y1, other.y1)
        if x0 >= x1 or y0 >= y1:
            return None
        return Term(self.coef * other.coef, self.t + other.t, self.s + other.s,
                    x0, x1, y0, y1, min(self.R, other.R))

    def power(self, e: float) -> "Term":
        if e < 0 and (self.x0 > -INF or self.x1 < INF or self.y0 > 0 or self.y1 < INF or self.R < INF):
            raise DomainError("negative powers need a field without indicator factors")
        return replace(self, coef=self.coef ** e, t=self.t * e, s=self.s * e)


def _y_moment(lo, hi, k):
    """``int_lo^hi y**k dy`` (vectorized, ``lo >= 0``)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if k == -1.0:
        with np.errstate(divide="ignore"):
            out = np.log(hi) - np.log(lo)
    elif k < -1.0:
        with np.errstate(divide="ignore"):
            out = (lo ** (k + 1) - hi ** (k + 1)) / (-(k + 1))
    else:
        out = (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
    return np.where(hi > lo, out, 0.0)


# --- polar integration of radial terms -------------------------------------

_N_THETA = 16


@lru_cache(maxsize=None)
def _legendre(n: int):
    return roots_legendre(n)


@lru_cache(maxsize=256)
def _jacobi(n: int, a: float, left: bool):
    # weight (1+x)**a at the left end, (1-x)**a at the right end
    return roots_jacobi(n, 0.0, a) if left else roots_jacobi(n, a, 0.0)


def _ray_integrand(theta, s, a, R, X0, X1, Y0, Y1):
    """Radial integral ``int r**(s+a+1) dr`` along each ray, without ``sin**a``."""
    c = np.cos(theta)
    sn = np.sin(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(Y0 > 0, Y0 / sn, 0.0)
        hi = np.minimum(R, Y1 / sn)
        pos = c > 1e-300
        neg = c < -1e-300
        lo = np.where(pos, np.maximum(lo, X0 / np.where(pos, c, 1.0)), lo)
        hi = np.where(pos, np.minimum(hi, X1 / np.where(pos, c, 1.0)), hi)
        lo = np.where(neg, np.maximum(lo, X1 / np.where(neg, c, -1.0)), lo)
        hi = np.where(neg, np.minimum(hi, X0 / np.where(neg, c, -1.0)), hi)
        zero = ~(pos | neg)
        hi = np.where(zero & ((X0 > 0) | (X1 < 0)), 0.0, hi)
        lo = np.maximum(lo, 0.0)
        e = s + a + 2.0
        span = np.log(hi) - np.log(lo)
        if e == 0.0:
            val = span
        else:
            # expm1 form avoids cancellation when e is small
            val = hi ** e * -np.expm1(-e * span) / e
    return np.where(hi > lo, val, 0.0)


def _polar_breakpoints(R, X0, X1, Y0, Y1):
    pts = {0.0, math.pi / 2, math.pi}
    for x in (X0, X1):
        for y in (Y0, Y1):
            if not (x == 0 and y == 0):
                pts.add(math.atan2(y, x))
    if R < INF:
        for x in (X0, X1):
            if abs(x) < R:
                y = math.sqrt(R * R - x * x)
                if Y0 <= y <= Y1:
                    pts.add(math.atan2(y, x))
        for y in (Y0, Y1):
            if 0 < y < R:
                xr = math.sqrt(R * R - y * y)
                for x in (xr, -xr):
                    if X0 <= x <= X1:
                        pts.add(math.atan2(y, x))
    return sorted(p for p in pts if 0.0 <= p <= math.pi)


def polar_rect_integral(s: float, a: float, R: float, X0: float, X1: float,
                        Y0: float, Y1: float, rel_tol: float = 1e-13) -> Tuple[float, float]:
    """``int |z|**s y**a dx dy`` over ``[X0,X1) x [Y0,Y1)`` intersected with ``|z| <= R``.

    The radial integral is done in closed form; the angular integral uses
    adaptive Gauss-Legendre panels between the geometric breakpoints and
    Gauss-Jacobi panels at ``theta = 0, pi`` to absorb ``sin(theta)**a``.
    Returns ``(value, error_estimate)``.
    """
    if X1 <= X0 or Y1 <= Y0:
        return 0.0, 0.0
    e = s + a + 2.0
    if Y0 <= 0 and X0 <= 0 <= X1 and e <= 0:
        return INF, 0.0
    args = (s, a, R, X0, X1, Y0, Y1)
    n = _N_THETA
    xl, wl = _legendre(n)

    def rule(t0, t1, end):
        h = t1 - t0
        if end is None or a == 0.0:
            th = t0 + 0.5 * h * (xl + 1.0)
            g = np.sin(th) ** a * _ray_integrand(th, *args)
            return 0.5 * h * float(np.dot(wl, g))
        xj, wj = _jacobi(n, float(a), end == "left")
        th = t0 + 0.5 * h * (xj + 1.0)
        if end == "left":
            d = th - 0.0
        else:
            d = math.pi - th
        g = (np.sin(th) / d) ** a * _ray_integrand(th, *args)
        return (0.5 * h) ** (a + 1.0) * float(np.dot(wj, g))

    total = 0.0
    err = 0.0
    bps = _polar_breakpoints(R, X0, X1, Y0, Y1)
    stack = []
    for t0, t1 in zip(bps[:-1], bps[1:]):
        if t1 - t0 <= 1e-15:
            continue
        end = "left" if t0 == 0.0 else ("right" if t1 == math.pi else None)
        stack.append((t0, t1, end, rule(t0, t1, end), 0))
    while stack:
        t0, t1, end, whole, depth = stack.pop()
        tm = 0.5 * (t0 + t1)
        e0 = "left" if end == "left" else None
        e1 = "right" if end == "right" else None
        q0 = rule(t0, tm, e0)
        q1 = rule(tm, t1, e1)
        d = abs(q0 + q1 - whole)
        if d <= rel_tol * abs(q0 + q1) or d <= 1e-300 or depth >= 48:
            total += q0 + q1
            err += d
        else:
            stack.append((t0, tm, e0, q0, depth + 1))
            stack.append((tm, t1, e1, q1, depth + 1))
    return total, err


def term_rect_integral(term: Term, X0, X1, Y0, Y1, alpha: float) -> Tuple[float, float]:
    """Integral of one term over a rectangle against ``dV_alpha``."""
    x0, x1 = max(X0, term.x0), min(X1, term.x1)
    y0, y1 = max(Y0, term.y0), min(Y1, term.y1)
    if x0 >= x1 or y0 >= y1:
        return 0.0, 0.0
    a = alpha + term.t
    if not term.radial:
        return term.coef * (x1 - x0) * float(_y_moment(y0, y1, a)), 0.0
    if term.R < INF:
        # nothing of the disk above y = R
        y1 = min(y1, term.R)
        x0, x1 = max(x0, -term.R), min(x1, term.R)
        if x0 >= x1 or y0 >= y1:
            return 0.0, 0.0
    v, e = polar_rect_integral(term.s, a, term.R, x0, x1, y0, y1)
    return term.coef * v, abs(term.coef) * e


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A nonnegative function on the upper half-plane.

    ``kind`` and ``params`` describe how the field was built (used for
    serialization); ``terms`` carries the exact representation when one
    exists and ``fn`` the generic evaluator otherwise.
    """

    kind: str
    params: tuple = ()
    terms: Optional[Tuple[Term, ...]] = None
    fn: Optional[Callable] = None
    breaks_x: Tuple[float, ...] = ()
    breaks_y: Tuple[float, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- evaluation
    def __call__(self, x, y):
        if self.terms is not None:
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            out = np.zeros(np.broadcast(x, y).shape)
            for t in self.terms:
                out = out + t(x, y)
            return out
        return np.asarray(self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)

    def at(self, z: complex) -> float:
        return float(self(np.array([z.real]), np.array([z.imag]))[0])

    @property
    def exact(self) -> bool:
        return self.terms is not None

    @property
    def is_zero(self) -> bool:
        return self.terms is not None and len(self.terms) == 0

    @property
    def piecewise_constant(self) -> bool:
        return self.terms is not None and all(t.piecewise_constant for t in self.terms)

    def _breaks(self):
        bx, by = set(self.breaks_x), set(self.breaks_y)
        for t in self.terms or ():
            bx.update(v for v in (t.x0, t.x1) if abs(v) < INF)
            by.update(v for v in (t.y0, t.y1) if 0 < v < INF)
        return tuple(sorted(bx)), tuple(sorted(by))

    # -- algebra
    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(float(other), self)
        return product(self, other)

    __rmul__ = __mul__

    def __add__(self, other):
        return field_sum([self, other])

    def power(self, e: float) -> "ScalarField":
        """Pointwise power ``f**e``."""
        if e == 1.0:
            return self
        if self.terms is not None:
            if len(self.terms) == 0:
                if e < 0:
                    raise DomainError("negative power of the zero field")
                return self
            if len(self.terms) == 1:
                return ScalarField("power", (self, e), (self.terms[0].power(e),))
            if self.piecewise_constant and e > 0:
                return ScalarField("power", (self, e), tuple(t.power(e) for t in self.cells()))
        base = self
        bx, by = self._breaks()
        with_fn = lambda x, y: base(x, y) ** e
        return ScalarField("power", (self, e), None, with_fn, bx, by)

    def cells(self) -> List[Term]:
        """Disjoint constant cells of a piecewise-constant field."""
        if not self.piecewise_constant:
            raise DomainError("field is not piecewise constant")
        key = ("cells",)
        if key in self._cache:
            return self._cache[key]
        xs = sorted({v for t in self.terms for v in (t.x0, t.x1)})
        ys = sorted({v for t in self.terms for v in (t.y0, t.y1)} | {0.0})
        xs = np.array(xs)
        ys = np.array(ys)
        xm = np.where(np.isinf(xs[:-1]), xs[1:] - 1.0, np.where(np.isinf(xs[1:]), xs[:-1] + 1.0, 0.5 * (xs[:-1] + xs[1:])))
        ym = np.where(np.isinf(ys[1:]), ys[:-1] + 1.0, 0.5 * (ys[:-1] + ys[1:]))
        X, Y = np.meshgrid(xm, ym, indexing="ij")
        V = self(X, Y)
        out = []
        for i, j in zip(*np.nonzero(V)):
            out.append(Term(float(V[i, j]), 0.0, 0.0, float(xs[i]), float(xs[i + 1]), float(ys[j]), float(ys[j + 1])))
        self._cache[key] = out
        return out

    def log(self) -> "ScalarField":
        base = self
        bx, by = self._breaks()
        return ScalarField("log", (self,), None, lambda x, y: np.log(base(x, y)), bx, by)

    def describe(self):
        """JSON-friendly description of the construction."""
        def conv(p):
            if isinstance(p, ScalarField):
                return p.describe()
            if isinstance(p, (list, tuple)):
                return [conv(q) for q in p]
            return p
        return {"kind": self.kind, "params": conv(list(self.params))}

    # -- integration
    def support_bounds(self) -> Optional[Tuple[float, float, float, float]]:
        """Bounding rectangle of the support for exact fields, else ``None``."""
        if self.terms is None:
            return None
        if not self.terms:
            return (0.0, 0.0, 0.0, 0.0)
        x0 = min(max(t.x0, -t.R) for t in self.terms)
        x1 = max(min(t.x1, t.R) for t in self.terms)
        y0 = min(t.y0 for t in self.terms)
        y1 = max(min(t.y1, t.R) for t in self.terms)
        return x0, x1, y0, y1


def constant(c: float) -> ScalarField:
    if c < 0:
        raise DomainError("fields are nonnegative")
    return ScalarField("constant", (c,), (Term(float(c)),) if c > 0 else ())


def power_y(t: float) -> ScalarField:
    return ScalarField("power_y", (t,), (Term(1.0, t=float(t)),))


def power_abs(s: float) -> ScalarField:
    return ScalarField("power_abs", (s,), (Term(1.0, s=float(s)),))


def box_indicator(a: float, b: float) -> ScalarField:
    """Indicator of the Carleson box over ``[a, b)``."""
    a, b = float(a), float(b)
    if not a < b:
        raise DomainError("box needs a < b")
    return ScalarField("box", (a, b), (Term(1.0, x0=a, x1=b, y0=0.0, y1=b - a),))


def interval_indicator(interval: IntervalLike) -> ScalarField:
    a, b = float_bounds(interval)
    return box_indicator(a, b)


def rect_indicator(x0: float, x1: float, y0: float, y1: float) -> ScalarField:
    if not (x0 < x1 and 0 <= y0 < y1):
        raise DomainError("rect needs x0 < x1 and 0 <= y0 < y1")
    return ScalarField("rect", (x0, x1, y0, y1), (Term(1.0, x0=x0, x1=x1, y0=y0, y1=y1),))


def half_disk(R: float) -> ScalarField:
    if not R > 0:
        raise DomainError("half_disk needs R > 0")
    return ScalarField("half_disk", (R,), (Term(1.0, R=float(R)),))


def scale(c: float, f: ScalarField) -> ScalarField:
    if c < 0:
        raise DomainError("fields are nonnegative")
    if f.terms is not None:
        return ScalarField("scale", (c, f), tuple(replace(t, coef=c * t.coef) for t in f.terms) if c > 0 else ())
    return ScalarField("scale", (c, f), None, lambda x, y: c * f(x, y), f.breaks_x, f.breaks_y)


def product(f: ScalarField, g: ScalarField) -> ScalarField:
    if f.terms is not None and g.terms is not None:
        out = []
        for a in f.terms:
            for b in g.terms:
                t = a.times(b)
                if t is not None and t.coef != 0:
                    out.append(t)
        return ScalarField("product", (f, g), tuple(out))
    bf, bg = f._breaks(), g._breaks()
    return ScalarField("product", (f, g), None, lambda x, y: f(x, y) * g(x, y),
                       tuple(sorted(set(bf[0]) | set(bg[0]))), tuple(sorted(set(bf[1]) | set(bg[1]))))


def field_sum(fields: Sequence[ScalarField]) -> ScalarField:
    fields = list(fields)
    if all(f.terms is not None for f in fields):
        return ScalarField("sum", tuple(fields), tuple(t for f in fields for t in f.terms))
    bx = set()
    by = set()
    for f in fields:
        a, b = f._breaks()
        bx.update(a)
        by.update(b)
    return ScalarField("sum", tuple(fields), None, lambda x, y: sum(f(x, y) for f in fields),
                       tuple(sorted(bx)), tuple(sorted(by)))


def from_callable(fn: Callable, breaks_x: Iterable[float] = (), breaks_y: Iterable[float] = (),
                  name: str = "callable") -> ScalarField:
    """Generic field from a vectorized ``fn(x, y) >= 0``."""
    return ScalarField("callable", (name,), None, fn, tuple(breaks_x), tuple(breaks_y))


def box_sum(boxes: Sequence[Tuple[float, float]], coefs: Sequence[float]) -> ScalarField:
    """``sum_k c_k * 1[Q_{[a_k, b_k)}]``."""
    terms = tuple(Term(float(c), x0=float(a), x1=float(b), y0=0.0, y1=float(b - a))
                  for (a, b), c in zip(boxes, coefs) if c > 0)
    return ScalarField("box_sum", (tuple(map(tuple, boxes)), tuple(coefs)), terms)


# ---------------------------------------------------------------------------
# generic strip engine


def _gl_rect(fn, x0, x1, y0, y1, alpha, n):
    x, w = _legendre(n)
    xs = x0 + 0.5 * (x1 - x0) * (x + 1.0)
    ys = y0 + 0.5 * (y1 - y0) * (x + 1.0)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    V = fn(X, Y) * Y ** alpha
    return 0.25 * (x1 - x0) * (y1 - y0) * float(w @ V @ w)


def _adaptive_rect(fn, x0, x1, y0, y1, alpha, n, tol, max_cells=4000):
    """Adaptive tensor Gauss-Legendre on one rectangle; returns (value, err)."""
    # start from roughly square cells
    h = y1 - y0
    k = int(min(4, max(1, math.ceil((x1 - x0) / h))))
    xs = np.linspace(x0, x1, k + 1)
    stack = [(xs[i], xs[i + 1], y0, y1, _gl_rect(fn, xs[i], xs[i + 1], y0, y1, alpha, n)) for i in range(k)]
    scale = abs(sum(v[-1] for v in stack))
    area = (x1 - x0) * (y1 - y0)
    total, err, cells = 0.0, 0.0, 0
    while stack:
        a, b, c, d, whole = stack.pop()
        if b - a >= d - c:
            xm = 0.5 * (a + b)
            parts = [(a, xm, c, d), (xm, b, c, d)]
        else:
            ym = 0.5 * (c + d)
            parts = [(a, b, c, ym), (a, b, ym, d)]
        q = [_gl_rect(fn, *p, alpha, n) for p in parts]
        s = sum(q)
        diff = abs(s - whole)
        cells += 1
        local = tol * max(abs(s), scale * (b - a) * (d - c) / area, 1e-300)
        if diff <= local or cells > max_cells or not np.isfinite(s):
            total += s
            err += diff
        else:
            for p, v in zip(parts, q):
                stack.append((*p, v))
    return total, err


def _split(lo, hi, breaks):
    pts = [lo] + [b for b in breaks if lo < b < hi] + [hi]
    return list(zip(pts[:-1], pts[1:]))


def integrate_rect_generic(f: ScalarField, X0: float, X1: float, Y0: float, Y1: float, alpha: float,
                           spec: QuadratureSpec = DEFAULT_SPEC, fn: Optional[Callable] = None) -> Tuple[float, float]:
    """Strip engine for ``int_{rect} f dV_alpha``; works for any evaluable field."""
    _check_alpha(alpha)
    fn = fn or f
    bx, by = f._breaks()
    n = spec.nodes_per_axis
    total, err = 0.0, 0.0
    xparts = _split(X0, X1, bx)
    strip_vals = []
    top = Y1
    k = 0
    tail = 0.0
    while True:
        lo = max(top / 2.0, Y0)
        sv = 0.0
        for ylo, yhi in _split(lo, top, by):
            for xa, xb in xparts:
                v, e = _adaptive_rect(fn, xa, xb, ylo, yhi, alpha, n, spec.rel_tol * 0.1)
                sv += v
                err += e
        total += sv
        strip_vals.append(sv)
        k += 1
        if lo <= Y0:
            tail = 0.0
            break
        if k >= 4:
            r1 = strip_vals[-1] / strip_vals[-2] if strip_vals[-2] else 0.0
            r0 = strip_vals[-2] / strip_vals[-3] if strip_vals[-3] else 0.0
            if strip_vals[-1] == 0.0 and strip_vals[-2] == 0.0 and k >= 8:
                tail = 0.0
                break
            if 0.0 <= r1 < 1.0 and abs(r1 - r0) <= 0.05 * max(r1, 1e-3):
                tail = sv * r1 / (1.0 - r1)
                if abs(tail) <= spec.rel_tol * abs(total + tail):
                    err += abs(tail) * abs(r1 - r0)
                    break
        if k >= spec.max_depth:
            raise NonConvergent(f"strip engine: tail {tail:.3e} after {k} strips (total {total:.6e})")
        top = lo
    return total + tail, err


# ---------------------------------------------------------------------------
# public integration API


def _interval_rect(interval: IntervalLike):
    a, b = float_bounds(interval)
    return a, b, 0.0, b - a


def integrate_rect(f: ScalarField, X0, X1, Y0, Y1, alpha: float,
                   spec: QuadratureSpec = DEFAULT_SPEC, use_exact: bool = True) -> Tuple[float, float]:
    """``int f dV_alpha`` over ``[X0, X1) x [Y0, Y1)``; returns ``(value, err)``."""
    _check_alpha(alpha)
    if use_exact and f.terms is not None:
        val, err = 0.0, 0.0
        for t in f.terms:
            v, e = term_rect_integral(t, X0, X1, Y0, Y1, alpha)
            val += v
            err += e
        return val, err
    return integrate_rect_generic(f, X0, X1, Y0, Y1, alpha, spec)


def integrate_box(f: ScalarField, interval: IntervalLike, alpha: float,
                  spec: QuadratureSpec = DEFAULT_SPEC, use_exact: bool = True) -> Tuple[float, float]:
    """``int_{Q_I} f dV_alpha``; returns ``(value, err_est)``.

    Exact fields use the term rules; ``use_exact=False`` forces the strip
    engine (used to cross-check the closed forms).
    """
    _check_alpha(alpha)
    key = ("box", float_bounds(interval), alpha)
    if use_exact and f.terms is not None and key in f._cache:
        return f._cache[key]
    out = integrate_rect(f, *_interval_rect(interval), alpha, spec, use_exact)
    if use_exact and f.terms is not None:
        f._cache[key] = out
    return out


def rect_integrals(f: ScalarField, x0, x1, y0, y1, alpha: float,
                   spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Vectorized ``int f dV_alpha`` over rectangles ``[x0, x1) x [y0, y1)``."""
    _check_alpha(alpha)
    x0, x1, y0, y1 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x0, x1, y0, y1)))
    out = np.zeros(x0.shape)
    if f.terms is None:
        flat = [integrate_rect(f, a, b, c, d, alpha, spec)[0]
                for a, b, c, d in zip(x0.ravel(), x1.ravel(), y0.ravel(), y1.ravel())]
        return np.array(flat).reshape(x0.shape)
    for t in f.terms:
        if t.radial:
            vals = [term_rect_integral(t, a, b, c, d, alpha)[0]
                    for a, b, c, d in zip(x0.ravel(), x1.ravel(), y0.ravel(), y1.ravel())]
            out += np.array(vals).reshape(x0.shape)
            continue
        w = np.clip(np.minimum(x1, t.x1) - np.maximum(x0, t.x0), 0.0, None)
        lo = np.maximum(y0, t.y0)
        hi = np.minimum(y1, t.y1)
        out += t.coef * w * _y_moment(lo, np.maximum(hi, lo), alpha + t.t)
    return out


def box_integrals(f: ScalarField, left: np.ndarray, length: np.ndarray, alpha: float,
                  spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Vectorized ``int_{Q_I} f dV_alpha`` over many boxes ``[left, left+length)``."""
    left = np.asarray(left, dtype=float)
    length = np.asarray(length, dtype=float)
    return rect_integrals(f, left, left + length, 0.0, length, alpha, spec)


def total_integral(f: ScalarField, alpha: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int_H f dV_alpha`` for compactly supported exact fields."""
    b = f.support_bounds()
    if b is None or not all(np.isfinite(b)):
        raise DomainError("total_integral needs a compactly supported exact field")
    if f.is_zero:
        return 0.0
    return integrate_rect(f, b[0], b[1], 0.0, b[3], alpha, spec)[0]


def log_box_integral(f: ScalarField, interval: IntervalLike, alpha: float,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int_{Q_I} log f dV_alpha``; closed form for ``c * y**t`` on a rectangle covering the box."""
    a, b, _, L = _interval_rect(interval)
    if f.terms is not None and len(f.terms) == 1:
        t = f.terms[0]
        if not t.radial and t.x0 <= a and b <= t.x1 and t.y0 == 0 and L <= t.y1:
            k = 1.0 + alpha
            m0 = L ** k / k
            mlog = L ** k * (math.log(L) / k - 1.0 / (k * k))
            return (b - a) * (math.log(t.coef) * m0 + t.t * mlog)
    if f.piecewise_constant:
        cells = f.cells()
        x0 = np.array([max(c.x0, a) for c in cells])
        x1 = np.array([min(c.x1, b) for c in cells])
        y0 = np.array([c.y0 for c in cells])
        y1 = np.array([min(c.y1, L) for c in cells])
        keep = (x1 > x0) & (y1 > y0)
        k = 1.0 + alpha
        vol = (x1 - x0)[keep] * (y1[keep] ** k - y0[keep] ** k) / k
        box = (b - a) * L ** k / k
        if vol.sum() < box * (1.0 - 1e-12):
            raise LogSingular(f"log f is not integrable on {interval}")
        return float(np.dot(np.log([c.coef for c, m in zip(cells, keep) if m]), vol))
    if f.terms is not None:
        sb = f.support_bounds()
        if sb is None or sb[0] > a or sb[1] < b or sb[2] > 0 or sb[3] < L:
            raise LogSingular(f"f vanishes on part of the box {interval}")
    try:
        with np.errstate(divide="ignore", invalid="ignore"):
            val, _ = integrate_rect_generic(f, a, b, 0.0, L, alpha, spec, fn=lambda x, y: np.log(f(x, y)))
    except NonConvergent as exc:
        raise LogSingular(f"log f is not integrable on {interval}") from exc
    if not np.isfinite(val):
        raise LogSingular(f"log f is not integrable on {interval}")
    return val


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class BorelMeasure:
    """Either ``density * dV_alpha`` or a finite list of point masses."""

    density: Optional[ScalarField] = None
    alpha: float = 0.0
    atoms: Tuple[Tuple[complex, float], ...] = ()

    def __post_init__(self):
        if self.density is None and not self.atoms:
            raise ValueError("measure needs a density or atoms")
        for z, m in self.atoms:
            if z.imag <= 0 or m <= 0:
                raise ValueError("atoms must lie in H with positive mass")

    @staticmethod
    def weighted(density: ScalarField, alpha: float) -> "BorelMeasure":
        _check_alpha(alpha)
        return BorelMeasure(density=density, alpha=alpha)

    @staticmethod
    def point_masses(atoms) -> "BorelMeasure":
        return BorelMeasure(atoms=tuple((complex(z), float(m)) for z, m in atoms))

    def rect(self, X0, X1, Y0, Y1, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
        if self.density is not None:
            return integrate_rect(self.density, X0, X1, Y0, Y1, self.alpha, spec)[0]
        return float(sum(m for z, m in self.atoms if X0 <= z.real < X1 and Y0 < z.imag < Y1))

    def boxes(self, left, length, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
        left = np.asarray(left, dtype=float)
        length = np.asarray(length, dtype=float)
        return self.rects(left, left + length, 0.0, length, spec)

    def rects(self, x0, x1, y0, y1, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
        """Vectorized measure of rectangles ``[x0, x1) x (y0, y1)``."""
        if self.density is not None:
            return rect_integrals(self.density, x0, x1, y0, y1, self.alpha, spec)
        x0, x1, y0, y1 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x0, x1, y0, y1)))
        out = np.zeros(x0.shape)
        for z, m in self.atoms:
            out += m * ((x0 <= z.real) & (z.real < x1) & (y0 < z.imag) & (z.imag < y1))
        return out

    def describe(self):
        if self.density is not None:
            return {"density": self.density.describe(), "alpha": self.alpha}
        return {"atoms": [[z.real, z.imag, m] for z, m in self.atoms]}


def measure_of_box(mu: BorelMeasure, interval: IntervalLike, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``mu(Q_I)`` with half-open membership for atoms."""
    return mu.rect(*_interval_rect(interval), spec)


# ---------------------------------------------------------------------------
# norms


def window_bands(window: ScaleWindow, beta=0):
    """Rectangles ``(x0, x1, y0, y1)``, one per scale, tiling the window's Whitney cells."""
    out = []
    for j in range(window.j_min, window.j_max + 1):
        cells = window.intervals(beta, j)
        a = float(cells[0].left)
        b = float(cells[-1].right)
        out.append((j, a, b, 2.0 ** (j - 1), 2.0 ** j))
    return out


def lp_norm(f: ScalarField, omega: ScalarField, p: float, alpha: float, window: ScaleWindow,
            spec: QuadratureSpec = DEFAULT_SPEC) -> Tuple[float, bool]:
    """``(int f**p omega dV_alpha)**(1/p)`` over the window's Whitney cells.

    Returns ``(value, tail_flag)``; the flag is set when the bottom or top
    band contributes more than ``spec.rel_tol`` of the total.
    """
    if p < 1:
        raise DomainError("p must be at least 1")
    g = product(f.power(p), omega)
    parts = []
    for j, a, b, y0, y1 in window_bands(window):
        parts.append(integrate_rect(g, a, b, y0, y1, alpha, spec)[0])
    total = float(sum(parts))
    shell = parts[0] + (parts[-1] if len(parts) > 1 else 0.0)
    flag = total > 0 and shell > spec.rel_tol * total
    return total ** (1.0 / p), bool(flag)


def half_disk_sine_moment(alpha: float) -> float:
    """``int_0^pi sin(theta)**alpha d theta`` by 1-D adaptive quadrature."""
    _check_alpha(alpha)
    return quad(lambda th: math.sin(th) ** alpha, 0.0, math.pi, epsabs=0, epsrel=1e-13, limit=200)[0]


def half_disk_moment(s: float, alpha: float, R: float = 1.0) -> float:
    """``int_{|z| <= R} |z|**s dV_alpha`` (half-disk polar closed form)."""
    e = 2.0 + alpha + s
    if e <= 0:
        return INF
    return half_disk_sine_moment(alpha) * R ** e / e
