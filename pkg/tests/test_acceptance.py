"""Acceptance criteria; each test prints one PASS/FAIL line."""
import time
from fractions import Fraction

import numpy as np
import pytest

from halfplane_lab.cli import load_scenarios, resolve_config
from halfplane_lab.constants import (bekolle_bonami, bekolle_infinity, box_mass_sequence, carleson_sequence_constant,
                                     class_constant)
from halfplane_lab.fields import (box_sum, constant, integrate_box, integrate_rect_generic, power_y, product,
                                  box_indicator)
from halfplane_lab.geometry import ScaleWindow, box_measure_alpha, containing_dyadic, top_half_measure_alpha
from halfplane_lab.operators import Params
from halfplane_lab.orlicz import complementary, generic, holder_check, luxembourg_norm, power
from halfplane_lab.verify import (Scenario, random_box_sums, run_scenario, sharpness_sweep,
                                  verify_kernel_domination, verify_level_sets)


@pytest.fixture
def report(capsys):
    def emit(n, ok, msg):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} acceptance {n}: {msg}")
        assert ok, msg
    return emit


def scenarios(tag):
    return load_scenarios(resolve_config(None, tag), tag)


def test_01_geometry_exactness(report):
    rng = np.random.default_rng(1)
    den = rng.integers(1, 10 ** 6, size=(10 ** 5, 2))
    num_a = rng.integers(-10 ** 9, 10 ** 9, size=10 ** 5)
    num_l = rng.integers(1, 10 ** 9, size=10 ** 5)
    cases = [(Fraction(int(a), int(d0)), Fraction(int(l), int(d1))) for a, l, (d0, d1) in zip(num_a, num_l, den)]
    t0 = time.perf_counter()
    fails = 0
    for a, L in cases:
        b = a + L
        _, J = containing_dyadic((a, b))
        if not (J.left <= a and b <= J.right and J.length <= 6 * L):
            fails += 1
    dt = time.perf_counter() - t0
    report(1, fails == 0 and dt < 10, f"{len(cases)} intervals, {fails} failures, {dt:.2f} s (limit 10 s)")


def test_02_measure_closed_forms(report):
    t0 = time.perf_counter()
    worst = 0.0
    for L in (0.25, 1.0, 2.0, 8.0):
        for alpha in (-0.5, 0.0, 1.0, 2.5):
            box = integrate_box(constant(1.0), (0.0, L), alpha, use_exact=False)[0]
            top = integrate_rect_generic(constant(1.0), 0.0, L, L / 2, L, alpha)[0]
            exact_box = L ** (2 + alpha) / (1 + alpha)
            exact_top = exact_box * (1 - 2 ** (-(1 + alpha)))
            assert box_measure_alpha(L, alpha) == pytest.approx(exact_box, rel=1e-14)
            assert top_half_measure_alpha(L, alpha) == pytest.approx(exact_top, rel=1e-14)
            worst = max(worst, abs(box / exact_box - 1), abs(top / exact_top - 1))
    dt = time.perf_counter() - t0
    report(2, worst <= 1e-10 and dt < 5, f"worst relative error {worst:.2e} (limit 1e-10), {dt:.2f} s (limit 5 s)")


def test_03_dyadic_weak_type(report):
    t0 = time.perf_counter()
    scs = scenarios("T2.1a")
    grid = {(str(s.sigma.describe()), s.params.gamma, s.params.alpha) for s in scs}
    assert len(grid) == 8 and all(s.family_size == 50 and s.n_lambda == 32 for s in scs)
    results = [run_scenario(s) for s in scs]
    worst = max(r.worst_ratio for r in results)
    ok = all(r.passed for r in results) and worst <= 1 + 1e-6
    dt = time.perf_counter() - t0
    report(3, ok and dt < 120, f"{sum(r.trials for r in results)} (f, lambda) trials over 8 scenarios, "
                               f"worst ratio {worst:.6f} (limit 1 + 1e-6), {dt:.1f} s (limit 120 s)")


def test_04_explicit_strong_constant(report):
    t0 = time.perf_counter()
    scs = scenarios("C2.1")
    got = {(s.params.p, s.params.alpha, s.params.gamma) for s in scs}
    assert got == {(2.0, 0.0, 0.0), (2.0, 0.0, 0.5)} and all(s.family_size == 20 for s in scs)
    assert Params(2, 2, 0, 0).level_constant() == 68.0
    results = [run_scenario(s) for s in scs]
    for s, r in zip(scs, results):
        P = s.params
        assert r.details["constant"] == pytest.approx(((1 + P.pp / P.q) * P.level_constant()) ** P.theta)
    worst = max(r.worst_ratio for r in results)
    dt = time.perf_counter() - t0
    report(4, worst <= 1 and dt < 120, f"worst ratio {worst:.4f} (limit 1), {dt:.1f} s (limit 120 s)")


def test_05_level_set_embedding(report):
    t0 = time.perf_counter()
    fails, trials = 0, 0
    for gamma in (0.0, 0.5):
        sc = Scenario("T2.1a", params=Params.critical(2, 0, gamma), seed=21)
        r = verify_level_sets(sc, 1000)
        fails += r.details["failures_union"]
        trials += r.trials
    dt = time.perf_counter() - t0
    report(5, fails == 0 and dt < 60, f"{trials} (z, lambda) samples, {fails} failures, {dt:.1f} s (limit 60 s)")


def test_06_carleson_binf(report):
    t0 = time.perf_counter()
    W = ScaleWindow(-10, 0, 0, 1)
    lines, ok = [], True
    for name, w in (("1", constant(1.0)), ("y^1/2", power_y(0.5)), ("y^-1/2", power_y(-0.5))):
        carl = carleson_sequence_constant(box_mass_sequence(w, 0.0), w, 0.0, 1.0, W).value
        binf = bekolle_infinity(w, 0.0, W).value
        ok &= carl <= binf * 1.01
        lines.append(f"{name}: {carl:.4f} <= {binf:.2f}")
        if name == "1":
            ok &= abs(carl / 2 - 1) <= 0.01
            lines.append(f"limit 2 off by {abs(carl / 2 - 1):.2e}")
    dt = time.perf_counter() - t0
    report(6, ok and dt < 60, "; ".join(lines) + f"; {dt:.1f} s (limit 60 s)")


def test_07_sawyer_two_sided(report):
    t0 = time.perf_counter()
    scs = scenarios("T2.4")
    assert len(scs) == 4
    results = [run_scenario(s) for s in scs]
    detail = ", ".join(f"K={r.details.get('K', float('nan')):.3f}" for r in results)
    dt = time.perf_counter() - t0
    report(7, all(r.passed for r in results) and dt < 300, f"4 scenarios, {detail}, {dt:.1f} s (limit 300 s)")


def test_08_orlicz(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst_lux = 0.0
    for k in range(50):
        f = random_box_sums(rng, 1, ScaleWindow(-3, 0, -1, 1), 6)[0]
        p = (1.5, 2.0, 3.0)[k % 3]
        alpha = (0.0, 1.0)[k % 2]
        I = (-1.0, 1.0)
        lux = luxembourg_norm(f, I, power(p), alpha)
        avg = (integrate_box(f.power(p), I, alpha)[0] / box_measure_alpha(2.0, alpha)) ** (1 / p)
        worst_lux = max(worst_lux, abs(lux / avg - 1))
    holder_fail = 0
    pieces = [(0, 0.5), (0.5, 1), (0, 1), (0, 0.25), (0.75, 1), (0.25, 0.5)]
    for k in range(1000):
        f = box_sum(pieces, rng.uniform(0, 5, len(pieces)))
        g = box_sum(pieces, rng.uniform(0, 5, len(pieces)))
        phi = (power(2), power(3), power(1.5))[k % 3]
        holder_fail += not holder_check(f, g, (0, 1), phi, (0.0, 1.0)[k % 2])[2]
    s = np.array([0.3, 0.8, 1.7, 2.5])
    pairs = [(lambda t: t ** 2 / 2, s ** 2 / 2), (lambda t: t ** 3 / 3, s ** 1.5 / 1.5)]
    worst_comp = max(float(np.max(np.abs(complementary(generic(fn))(s) / ref - 1))) for fn, ref in pairs)
    lin = complementary(generic(lambda t: t))(np.array([0.5, 1.5]))
    ok_lin = lin[0] == 0 and lin[1] >= 1e300
    dt = time.perf_counter() - t0
    ok = worst_lux <= 1e-8 and holder_fail == 0 and worst_comp <= 1e-4 and ok_lin and dt < 60
    report(8, ok, f"Luxembourg rel err {worst_lux:.1e} (limit 1e-8), Hoelder failures {holder_fail}/1000 "
                  f"(constant 2), complementary rel err {worst_comp:.1e} (limit 1e-4), {dt:.1f} s (limit 60 s)")


def test_09_sharpness_rates(report):
    t0 = time.perf_counter()
    P = Params.critical(2, 0, 0.5)
    sw = sharpness_sweep(P, [0.2, 0.1, 0.05, 0.025], tol_ratio=0.15, tol_ingredients=0.10)
    ing = sw.ingredients
    checks = [("B_pq", P.q / P.pp, 0.10), ("norm_omega_f", 0.5, 0.10), ("R", 0.75, 0.15)]
    ok = all(abs(ing[k]["slope"] - t) <= tol * t for k, t, tol in checks)
    dt = time.perf_counter() - t0
    msg = ", ".join(f"{k} slope {ing[k]['slope']:.4f} vs {t:g} (tol {tol:.0%})" for k, t, tol in checks)
    msg += f"; q/p' evaluates to {P.q / P.pp:g}, the criterion text states 4; {dt:.1f} s (limit 600 s)"
    report(9, ok and dt < 600, msg)


def test_10_class_algebra(report):
    t0 = time.perf_counter()
    W = ScaleWindow(-3, 1, -2, 2)
    P = Params(2, 2, 0, 0)
    worst_box, worst_closed = 0.0, 0.0
    for t in (0.25, -0.25, 0.5, -0.5):
        w = power_y(t)
        bp = bekolle_bonami(w, 2, 0.0, W)
        apq = class_constant("A_pq", w.power(1 - P.pp), w, P, W)
        worst_box = max(worst_box, float(np.max(np.abs(np.asarray(apq.per_box) / np.asarray(bp.per_box) - 1))))
        worst_closed = max(worst_closed, abs(bp.value * (1 - t * t) - 1))
    dt = time.perf_counter() - t0
    ok = worst_box <= 1e-8 and worst_closed <= 1e-6 and dt < 60
    report(10, ok, f"A_pq(sigma = omega^(1-p')) vs B_p per box {worst_box:.1e} (limit 1e-8), "
                   f"1/(1-t^2) rel err {worst_closed:.1e} (limit 1e-6), {dt:.1f} s (limit 60 s)")


def test_11_kernel_domination(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for sc in scenarios("T2.7"):
        r = verify_kernel_domination(sc, 100)
        ok &= r.trials >= 100 and r.details["drift"] < 0.05
        parts.append(f"C={r.details['C']:.4f} drift {r.details['drift']:.2%}")
    dt = time.perf_counter() - t0
    report(11, ok and dt < 300, f"100 z per scenario, {'; '.join(parts)} (limit 5%), {dt:.1f} s (limit 300 s)")
