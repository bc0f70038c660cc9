"""Dyadic grids on the real line and Carleson boxes in the upper half-plane.

Two grids are used, ``D^0`` (the standard dyadic grid) and ``D^{1/3}``
(the one-third shifted grid).  An interval of grid ``beta`` at scale ``j``
and translation ``m`` is::

    2**j * ([0, 1) + m + (-1)**j * beta)

Endpoints are kept as :class:`fractions.Fraction` so that membership tests
are exact; floats are produced only when a quadrature needs them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np

SHIFTS = (Fraction(0), Fraction(1, 3))

Number = Union[int, float, Fraction]


def as_shift(beta) -> Fraction:
    """Normalize a grid shift to the exact rationals ``0`` or ``1/3``."""
    if isinstance(beta, str):
        beta = Fraction(beta)
    if isinstance(beta, float):
        if abs(beta) < 1e-12:
            return SHIFTS[0]
        if abs(beta - 1.0 / 3.0) < 1e-12:
            return SHIFTS[1]
    b = Fraction(beta)
    if b not in SHIFTS:
        raise ValueError(f"grid shift must be 0 or 1/3, got {beta!r}")
    return b


def _pow2(j: int) -> Fraction:
    return Fraction(2) ** j


def _offset(j: int, beta: Fraction) -> Fraction:
    # (-1)**j * beta
    return beta if j % 2 == 0 else -beta


def interval_endpoints(j: int, m: int, beta=0) -> Tuple[Fraction, Fraction]:
    """Return the exact endpoints ``[left, right)`` of the grid interval."""
    beta = as_shift(beta)
    h = _pow2(j)
    left = h * (m + _offset(j, beta))
    return left, left + h


def translation_index(x: Number, j: int, beta=0) -> int:
    """Translation ``m`` of the scale-``j`` interval of grid ``beta`` containing ``x``."""
    beta = as_shift(beta)
    return math.floor(Fraction(x) / _pow2(j) - _offset(j, beta))


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """Member of a dyadic grid, identified by scale, translation and shift."""

    j: int
    m: int
    beta: Fraction = SHIFTS[0]

    def __post_init__(self):
        object.__setattr__(self, "beta", as_shift(self.beta))

    @property
    def left(self) -> Fraction:
        return interval_endpoints(self.j, self.m, self.beta)[0]

    @property
    def right(self) -> Fraction:
        return interval_endpoints(self.j, self.m, self.beta)[1]

    @property
    def length(self) -> Fraction:
        return _pow2(self.j)

    def bounds(self) -> Tuple[float, float]:
        left, right = interval_endpoints(self.j, self.m, self.beta)
        return float(left), float(right)

    def contains_point(self, x: Number) -> bool:
        left, right = interval_endpoints(self.j, self.m, self.beta)
        return left <= Fraction(x) < right

    def contains(self, other: "DyadicInterval") -> bool:
        a, b = interval_endpoints(self.j, self.m, self.beta)
        c, d = interval_endpoints(other.j, other.m, other.beta)
        return a <= c and d <= b

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.j + 1, translation_index(self.left, self.j + 1, self.beta), self.beta)

    def child(self, side: str) -> "DyadicInterval":
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        m = translation_index(self.left, self.j - 1, self.beta)
        return DyadicInterval(self.j - 1, m if side == "left" else m + 1, self.beta)

    def children(self) -> Tuple["DyadicInterval", "DyadicInterval"]:
        return self.child("left"), self.child("right")

    def box_contains(self, x: Number, y: Number) -> bool:
        """Exact test of ``x + iy`` in the open-top Carleson box ``Q_I``."""
        return self.contains_point(x) and 0 < Fraction(y) < self.length

    def top_contains(self, x: Number, y: Number) -> bool:
        """Exact test of ``x + iy`` in the top half ``T_I``."""
        y = Fraction(y)
        return self.contains_point(x) and self.length / 2 < y < self.length

    def to_dict(self) -> dict:
        left, right = self.bounds()
        return {"j": self.j, "m": self.m, "beta": str(self.beta), "left": left, "right": right}

    def __str__(self) -> str:
        left, right = interval_endpoints(self.j, self.m, self.beta)
        return f"[{left}, {right})"


@dataclass(frozen=True)
class Interval:
    """A bounded half-open real interval ``[left, right)`` (not necessarily dyadic)."""

    left: Fraction
    right: Fraction

    def __post_init__(self):
        object.__setattr__(self, "left", Fraction(self.left))
        object.__setattr__(self, "right", Fraction(self.right))
        if not self.right > self.left:
            raise ValueError("interval must be nonempty")

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    def bounds(self) -> Tuple[float, float]:
        return float(self.left), float(self.right)


IntervalLike = Union[DyadicInterval, Interval, Tuple[Number, Number]]


def float_bounds(interval: IntervalLike) -> Tuple[float, float]:
    """Floating-point endpoints of any interval-like object."""
    if isinstance(interval, (DyadicInterval, Interval)):
        return interval.bounds()
    a, b = interval
    return float(a), float(b)


@dataclass(frozen=True)
class CarlesonBox:
    """The box ``Q_I = I x (0, |I|)``; ``top`` selects the top half ``T_I``."""

    base: IntervalLike
    top: bool = False

    def rect(self) -> Tuple[float, float, float, float]:
        a, b = float_bounds(self.base)
        L = b - a
        return a, b, (L / 2 if self.top else 0.0), L


@dataclass(frozen=True)
class ScaleWindow:
    """Truncation of the dyadic family: scales ``j_min..j_max`` meeting ``[x_lo, x_hi)``."""

    j_min: int
    j_max: int
    x_lo: float
    x_hi: float

    def __post_init__(self):
        if self.j_min > self.j_max:
            raise ValueError("j_min must not exceed j_max")
        if not self.x_lo < self.x_hi:
            raise ValueError("x_lo must be below x_hi")

    def intervals(self, beta=0, j: int | None = None) -> List[DyadicInterval]:
        """All grid intervals of the window, coarse scales first."""
        beta = as_shift(beta)
        scales = range(self.j_max, self.j_min - 1, -1) if j is None else [j]
        out = []
        lo, hi = Fraction(self.x_lo), Fraction(self.x_hi)
        for s in scales:
            m0 = translation_index(lo, s, beta)
            m1 = translation_index(hi, s, beta)
            for m in range(m0, m1 + 1):
                a, b = interval_endpoints(s, m, beta)
                if a < hi and b > lo:
                    out.append(DyadicInterval(s, m, beta))
        return out

    def grow(self) -> "ScaleWindow":
        """Double the window: one more scale at each end and twice the x-range."""
        c = 0.5 * (self.x_lo + self.x_hi)
        h = self.x_hi - self.x_lo
        return ScaleWindow(self.j_min - 1, self.j_max + 1, c - h, c + h)

    def to_dict(self) -> dict:
        return {"j_min": self.j_min, "j_max": self.j_max, "x_lo": self.x_lo, "x_hi": self.x_hi}


def _pow2_ge(s: int, num: int, den: int) -> bool:
    """``2**s >= num / den`` for positive integers."""
    return (den << s) >= num if s >= 0 else den >= (num << -s)


def _pow2_le(s: int, num: int, den: int) -> bool:
    """``2**s <= num / den`` for positive integers."""
    return (den << s) <= num if s >= 0 else den <= (num << -s)


def containing_dyadic(interval: IntervalLike) -> Tuple[Fraction, DyadicInterval]:
    """Grid interval ``J`` with ``I`` inside ``J`` and ``|J| <= 6|I|``.

    Ties are broken by preferring ``beta = 0``, then the shorter ``J``, then
    the smaller left endpoint.  All arithmetic is exact: both endpoints are
    put over a common denominator ``q`` and scaled by 3, so every comparison
    is between integers.
    """
    if isinstance(interval, (DyadicInterval, Interval)):
        a, b = interval.left, interval.right
    else:
        a, b = Fraction(interval[0]), Fraction(interval[1])
    if b <= a:
        raise ValueError("interval must be nonempty")
    q = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
    pa, pb = a.numerator * (q // a.denominator), b.numerator * (q // b.denominator)
    n = pb - pa
    # smallest j with 2**j >= |I|
    j = n.bit_length() - q.bit_length()
    while not _pow2_ge(j, n, q):
        j += 1
    while _pow2_ge(j - 1, n, q):
        j -= 1
    for beta in SHIFTS:
        s = j
        while _pow2_le(s, 6 * n, q):
            e = 0 if beta == 0 else (1 if s % 2 == 0 else -1)
            if s >= 0:
                h = 1 << s
                m = (3 * pa - e * h * q) // (3 * h * q)
                ok = h * q * (e + 3 * (m + 1)) >= 3 * pb
            else:
                t = 1 << -s
                m = (3 * pa * t - e * q) // (3 * q)
                ok = q * (e + 3 * (m + 1)) >= 3 * pb * t
            if ok:
                return beta, DyadicInterval(s, m, beta)
            s += 1
    raise AssertionError("covering lemma failed")  # unreachable


def box_measure_alpha(L: Number, alpha: float) -> float:
    """``|Q_I|_alpha = L**(2+alpha) / (1+alpha)`` for an interval of length ``L``."""
    if alpha <= -1:
        raise ValueError("alpha must exceed -1")
    if L <= 0:
        raise ValueError("L must be positive")
    return float(L) ** (2.0 + alpha) / (1.0 + alpha)


def top_half_measure_alpha(L: Number, alpha: float) -> float:
    """``|T_I|_alpha``, the measure of the top half of ``Q_I``."""
    return box_measure_alpha(L, alpha) * (1.0 - 2.0 ** (-(1.0 + alpha)))


def boxes_containing(z: complex, beta, window: ScaleWindow) -> List[DyadicInterval]:
    """Chain of window boxes of grid ``beta`` containing ``z``, finest first."""
    beta = as_shift(beta)
    x, y = Fraction(z.real), Fraction(z.imag)
    if y <= 0:
        raise ValueError("z must lie in the upper half-plane")
    lo, hi = Fraction(window.x_lo), Fraction(window.x_hi)
    out = []
    for j in range(window.j_min, window.j_max + 1):
        if _pow2(j) <= y:
            continue
        m = translation_index(x, j, beta)
        a, b = interval_endpoints(j, m, beta)
        if a < hi and b > lo:
            out.append(DyadicInterval(j, m, beta))
    return out


def whitney_cells(window: ScaleWindow, beta=0) -> List[DyadicInterval]:
    """Intervals whose top halves ``T_I`` tile the window region."""
    return window.intervals(beta)


def chain_arrays(x: np.ndarray, y: np.ndarray, beta, window: ScaleWindow):
    """Vectorized chain enumeration in floating point.

    Returns ``(j, left)`` arrays of shape ``(n_points, n_scales)`` together
    with a boolean mask of the boxes that contain each point.  Intended for
    quadrature nodes, where exact membership is irrelevant.
    """
    beta = float(as_shift(beta))
    js = np.arange(window.j_min, window.j_max + 1)
    h = 2.0 ** js
    off = h * np.where(js % 2 == 0, beta, -beta)
    x = np.asarray(x, dtype=float)[:, None]
    y = np.asarray(y, dtype=float)[:, None]
    m = np.floor((x - off) / h)
    left = off + m * h
    mask = (h > y) & (left < window.x_hi) & (left + h > window.x_lo)
    return np.broadcast_to(js, left.shape), left, mask


def iter_descendants(interval: DyadicInterval, depth: int) -> Iterator[DyadicInterval]:
    """``interval`` and all its descendants down to ``depth`` generations."""
    level: Sequence[DyadicInterval] = [interval]
    for _ in range(depth + 1):
        yield from level
        level = [c for i in level for c in i.children()]
