"""Weight-class characteristics and testing constants as suprema over window boxes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence, Union

import numpy as np

from .fields import (DEFAULT_SPEC, BorelMeasure, LogSingular, NonConvergent, QuadratureSpec, ScalarField,
                     box_integrals, constant, log_box_integral, rect_integrals)
from .geometry import SHIFTS, DyadicInterval, ScaleWindow, as_shift
from .operators import (FractionalAverages, Params, fractional_averages, maximal_lq_layer_cake, window_tree)
from .orlicz import YoungFunction, complementary, luxembourg_norm


class NonIntegrable(ArithmeticError):
    """A negative power of a weight is not integrable on some box."""


KINDS = ("A_pq", "C_pq", "S_pq", "B_pq_joint", "strong_class", "weak_class", "bump_single", "bump_double")


@dataclass(frozen=True)
class ConstantReport:
    """Supremum of a per-box quantity over a window, with a refinement diagnostic.

    ``refinement_delta`` is the relative change between the window and the
    window shrunk by one growth step (one scale at each end, half the range).
    """

    name: str
    value: float
    argmax: Optional[DyadicInterval]
    window: ScaleWindow
    refinement_delta: float
    variants: Dict[str, float] = field(default_factory=dict)
    per_box: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = {"name": self.name, "value": self.value,
               "argmax": None if self.argmax is None else self.argmax.to_dict(),
               "window": self.window.to_dict(), "refinement_delta": self.refinement_delta}
        if self.variants:
            out["variants"] = dict(self.variants)
        return out


def _inner_mask(tree, window: ScaleWindow) -> np.ndarray:
    """Nodes of the window shrunk by one growth step."""
    c = 0.5 * (window.x_lo + window.x_hi)
    h = 0.25 * (window.x_hi - window.x_lo)
    return ((tree.j >= window.j_min + 1) & (tree.j <= window.j_max - 1)
            & (tree.left < c + h) & (tree.left + tree.length > c - h))


def _report(name: str, window: ScaleWindow, per_grid, variants=None) -> ConstantReport:
    """Assemble a report from ``[(tree, values), ...]`` over the grids."""
    best, arg, inner = -math.inf, None, -math.inf
    allv = []
    for tree, vals in per_grid:
        vals = np.asarray(vals, dtype=float)
        allv.append(vals)
        ok = ~np.isnan(vals)
        if not ok.any():
            continue
        k = int(np.nanargmax(vals))
        if vals[k] > best:
            best, arg = float(vals[k]), tree.nodes[k]
        m = _inner_mask(tree, window) & ok
        if m.any():
            inner = max(inner, float(vals[m].max()))
    if best == -math.inf:
        best = 0.0
    delta = 0.0 if best == 0 or inner == -math.inf else max(0.0, (best - inner) / abs(best))
    return ConstantReport(name, best, arg, window, delta, dict(variants or {}),
                          np.concatenate(allv) if allv else None)


def _grids(grids):
    return [as_shift(b) for b in (SHIFTS if grids is None else grids)]


def _moments(f: ScalarField, tree, alpha: float, spec: QuadratureSpec, name: str = "") -> np.ndarray:
    try:
        v = box_integrals(f, tree.left, tree.length, alpha, spec)
    except NonConvergent as exc:
        raise NonIntegrable(f"{name} fails quadrature: {exc}") from exc
    if not np.all(np.isfinite(v)):
        raise NonIntegrable(f"{name} is not integrable on some window box")
    return v


def _box_alpha(tree, alpha):
    return tree.length ** (2.0 + alpha) / (1.0 + alpha)


def bekolle_bonami(omega: ScalarField, p: float, alpha: float, window: ScaleWindow,
                   spec: QuadratureSpec = DEFAULT_SPEC, grids=None) -> ConstantReport:
    """``[omega]_{B_{p,alpha}} = sup (avg omega)(avg omega**(1-p'))**(p-1)``."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    pp = p / (p - 1)
    dual = omega.power(1.0 - pp)
    out = []
    for b in _grids(grids):
        t = window_tree(window, b)
        Q = _box_alpha(t, alpha)
        a = _moments(omega, t, alpha, spec, "omega") / Q
        s = _moments(dual, t, alpha, spec, "omega**(1-p')") / Q
        out.append((t, a * s ** (p - 1.0)))
    return _report("B_p_alpha", window, out)


def _binf_box(omega: ScalarField, J: DyadicInterval, alpha: float, window: ScaleWindow, grids, spec) -> float:
    """``int_{Q_J} sum_{b in grids} M^{d,b}(omega 1_{Q_J}) dV_alpha`` resolved down to the window's finest scale."""
    a, bJ = float(J.left), float(J.right)
    LJ = bJ - a
    total = 0.0
    for b in grids:
        t = window_tree(window, b)
        x0 = np.maximum(t.left, a)
        x1 = np.minimum(t.left + t.length, bJ)
        hit = x1 > x0
        h = np.minimum(t.length, LJ)
        v = np.zeros(t.j.shape)
        v[hit] = rect_integrals(omega, x0[hit], x1[hit], 0.0, h[hit], alpha, spec) / _box_alpha(t, alpha)[hit]
        cm = v.copy()
        for j in range(window.j_max - 1, window.j_min - 1, -1):
            idx = np.nonzero(t.j == j)[0]
            par = t.parent[idx]
            ok = par >= 0
            cm[idx[ok]] = np.maximum(cm[idx[ok]], cm[par[ok]])
        inside = hit & (t.j <= J.j)
        k1 = 1.0 + alpha
        band = (t.length ** k1 - (t.length / 2) ** k1) / k1
        total += float(np.sum(cm[inside] * (x1 - x0)[inside] * band[inside]))
        fine = inside & (t.j == window.j_min)
        strip = (t.length / 2) ** k1 / k1
        total += float(np.sum(cm[fine] * (x1 - x0)[fine] * strip[fine]))
    return total


def bekolle_infinity(omega: ScalarField, alpha: float, window: ScaleWindow, spec: QuadratureSpec = DEFAULT_SPEC,
                     grids=None, test_scales: Optional[Sequence[int]] = None) -> ConstantReport:
    """``[omega]_{B_{infty,alpha}} = sup_J |Q_J|_omega**-1 int_{Q_J} M_alpha(omega 1_{Q_J}) dV_alpha``.

    The reported value uses the covering-lemma upper bound
    ``6**(2+alpha) sum_beta M^{d,beta}`` for the inner maximal function; the
    ``dyadic`` variant uses the single grid of ``J``.  Inner averages are
    ``|Q_I|_alpha``-normalized, so ``omega = 1`` gives 1 for the dyadic variant.
    """
    both = [as_shift(b) for b in SHIFTS]
    up, dy = [], []
    for b in _grids(grids):
        t = window_tree(window, b)
        mass = _moments(omega, t, alpha, spec, "omega")
        vu = np.full(len(t.nodes), np.nan)
        vd = np.full(len(t.nodes), np.nan)
        for k, J in enumerate(t.nodes):
            if test_scales is not None and J.j not in test_scales:
                continue
            if mass[k] <= 0:
                vu[k] = vd[k] = 0.0
                continue
            vd[k] = _binf_box(omega, J, alpha, window, [b], spec) / mass[k]
            vu[k] = 6.0 ** (2.0 + alpha) * _binf_box(omega, J, alpha, window, both, spec) / mass[k]
        up.append((t, vu))
        dy.append((t, vd))
    dyadic = _report("B_inf_alpha", window, dy)
    rep = _report("B_inf_alpha", window, up, {"dyadic": dyadic.value, "dyadic_refinement_delta": dyadic.refinement_delta})
    return rep


# ---------------------------------------------------------------------------
# two-weight and class constants


def _avg(f, t, alpha, spec, name):
    return _moments(f, t, alpha, spec, name) / _box_alpha(t, alpha)


def _mu_boxes(mu: Union[BorelMeasure, ScalarField], t, alpha, spec):
    if isinstance(mu, ScalarField):
        mu = BorelMeasure.weighted(mu, alpha)
    return mu.boxes(t.left, t.length, spec)


def _per_box(kind: str, sigma, other, P: Params, t, spec, phi: Optional[YoungFunction], psi: Optional[YoungFunction],
             r: Optional[float]) -> np.ndarray:
    a = P.alpha
    Q = _box_alpha(t, a)
    g = P.gamma / (2.0 + a)
    p, q, pp = P.p, P.q, P.pp
    if kind == "A_pq":
        w = _moments(other, t, a, spec, "omega")
        s = _moments(sigma, t, a, spec, "sigma")
        return w ** (p / q) * s ** (p / pp) / Q ** (p * P.theta)
    if kind == "C_pq":
        w = _moments(other, t, a, spec, "omega")
        s = _moments(sigma.power(-pp), t, a, spec, "sigma**(-p')")
        return Q ** (g - 1.0) * w ** (1.0 / q) * s ** (1.0 / pp)
    if kind == "S_pq":
        w = _moments(other, t, a, spec, "omega")
        s = _moments(sigma, t, a, spec, "sigma")
        lg = np.empty(Q.shape)
        for k, I in enumerate(t.nodes):
            try:
                lg[k] = -log_box_integral(sigma, I, a, spec) / Q[k]
            except LogSingular:
                lg[k] = math.inf
        return w ** (p / q) * s ** p / Q ** (p * P.theta + 1.0) * np.exp(lg)
    if kind == "B_pq_joint":
        return _avg(other.power(q), t, a, spec, "omega**q") * _avg(other.power(-pp), t, a, spec, "omega**(-p')") ** (q / pp)
    if kind == "strong_class":
        m = _mu_boxes(other, t, a, spec)
        s = _moments(sigma, t, a, spec, "sigma")
        return Q ** (-q * P.theta) * m * s ** (q / pp)
    if kind == "weak_class":
        m = _mu_boxes(other, t, a, spec)
        if p == 1:
            inv = np.array([_ess_inf(sigma, I) for I in t.nodes])
            with np.errstate(divide="ignore"):
                dual = np.where(inv > 0, 1.0 / inv, math.inf)
            return Q ** (q * (g - 1.0 / p)) * dual ** q * m
        dual = _avg(sigma.power(1.0 - pp), t, a, spec, "omega**(1-p')")
        return Q ** (q * (g - 1.0 / p)) * dual ** (q / pp) * m
    if kind == "bump_single":
        if r is not None:
            inner = _avg(sigma.power(-pp * r), t, a, spec, "omega**(-p'r)") ** (q / (pp * r))
        else:
            ps = complementary(phi)
            inner = np.array([luxembourg_norm(sigma.power(-1.0), I, ps, a, spec) for I in t.nodes]) ** q
        m = _mu_boxes(other, t, a, spec)
        return Q ** (q * (g - 1.0 / p)) * inner * m
    if kind == "bump_double":
        e = g + 1.0 / q - 1.0 / p
        if r is not None:
            wn = _avg(other.power(q * r), t, a, spec, "omega**(qr)") ** (1.0 / (q * r))
            sn = _avg(sigma.power(-pp * r), t, a, spec, "sigma**(-p'r)") ** (1.0 / (pp * r))
        else:
            wn = np.array([luxembourg_norm(other, I, psi, a, spec) for I in t.nodes])
            sn = np.array([luxembourg_norm(sigma.power(-1.0), I, phi, a, spec) for I in t.nodes])
        return Q ** e * wn * sn
    raise ValueError(f"unknown class kind {kind!r}; expected one of {KINDS}")


def _ess_inf(w: ScalarField, I: DyadicInterval, n: int = 64) -> float:
    """Essential infimum of ``w`` on ``Q_I`` over a geometric quadrature mesh."""
    a, b = I.bounds()
    L = b - a
    xs = a + (np.arange(n) + 0.5) / n * L
    ys = L * 2.0 ** (-np.linspace(0.0, 30.0, n))
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return float(np.min(w(X, Y)))


def class_constant(kind: str, sigma: ScalarField, other, P: Params, window: ScaleWindow,
                   spec: QuadratureSpec = DEFAULT_SPEC, phi: Optional[YoungFunction] = None,
                   psi: Optional[YoungFunction] = None, r: Optional[float] = None, grids=None) -> ConstantReport:
    """Supremum over window boxes of one class characteristic.

    ``other`` is the second weight ``omega`` (``A_pq``, ``C_pq``, ``S_pq``,
    ``bump_double``), the measure ``mu`` (``strong_class``, ``weak_class``,
    ``bump_single``; a field is read as ``field * dV_alpha``) or the single
    weight (``B_pq_joint``, with ``sigma`` ignored).  For ``weak_class`` and
    ``bump_single`` the weight enters as ``sigma``.  Bump kinds take a Young
    function ``phi`` (with ``psi`` for ``bump_double``) or a power bump
    exponent ``r``.
    """
    out = []
    for b in _grids(grids):
        t = window_tree(window, b)
        with np.errstate(over="ignore", invalid="ignore"):
            out.append((t, _per_box(kind, sigma, other, P, t, spec, phi, psi, r)))
    return _report(kind, window, out)


def sawyer_testing(sigma: ScalarField, mu: BorelMeasure, P: Params, beta, window: ScaleWindow,
                   spec: QuadratureSpec = DEFAULT_SPEC, test_window: Optional[ScaleWindow] = None,
                   exact: bool = False) -> ConstantReport:
    """``sup_I ||M^{d,beta}(1_{Q_I} sigma)||_{L^q(mu)} / |Q_I|_{sigma,alpha}**(1/p)``.

    Test boxes range over ``test_window`` (default: the window); the norm is
    the layer-cake sum on the 2**(1/8) grid, or band-exact with ``exact``.
    """
    from .fields import box_indicator
    from .operators import maximal_lq_exact
    tw = test_window or window
    tt = window_tree(tw, beta)
    vals = np.zeros(len(tt.nodes))
    if not sigma.is_zero:
        mass = _moments(sigma, tt, P.alpha, spec, "sigma")
        for k, I in enumerate(tt.nodes):
            if mass[k] <= 0:
                continue
            a, b = I.bounds()
            fa = fractional_averages(box_indicator(a, b), P, beta, window, sigma, "length", spec)
            nrm = maximal_lq_exact(fa, mu, P.q, spec) if exact else maximal_lq_layer_cake(fa, mu, P.q, spec=spec)
            vals[k] = nrm / mass[k] ** (1.0 / P.p)
    rep = _report("sawyer_testing", tw, [(tt, vals)])
    return rep


# ---------------------------------------------------------------------------
# Carleson sequences


def box_mass_sequence(omega: ScalarField, alpha: float, spec: QuadratureSpec = DEFAULT_SPEC):
    """The sequence ``I -> |Q_I|_{omega,alpha}`` as a tree-array callable."""
    return lambda tree: box_integrals(omega, tree.left, tree.length, alpha, spec)


def carleson_sequence_constant(lam_seq: Union[Mapping[DyadicInterval, float], Callable], omega: ScalarField,
                               alpha: float, delta: float, window: ScaleWindow,
                               spec: QuadratureSpec = DEFAULT_SPEC, grids=None) -> ConstantReport:
    """``sup_J sum_{I in J} lam_I / |Q_J|_{omega,alpha}**delta`` via bottom-up subtree sums."""
    if delta < 1:
        raise ValueError("delta must be at least 1")
    out = []
    for b in _grids(grids):
        t = window_tree(window, b)
        if callable(lam_seq):
            lam = np.asarray(lam_seq(t), dtype=float)
        else:
            lam = np.array([float(lam_seq.get(I, 0.0)) for I in t.nodes])
        sub = lam.copy()
        for k in range(len(sub) - 1, -1, -1):
            par = t.parent[k]
            if par >= 0:
                sub[par] += sub[k]
        mass = box_integrals(omega, t.left, t.length, alpha, spec)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(mass > 0, sub / mass ** delta, np.where(sub > 0, math.inf, 0.0))
        out.append((t, v))
    return _report("carleson_seq", window, out)
