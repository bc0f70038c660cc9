import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from halfplane_lab.fields import (BorelMeasure, box_indicator, box_sum, constant, log_box_integral, power_y,
                                  product)
from halfplane_lab.geometry import ScaleWindow
from halfplane_lab.operators import (Params, WindowTooSmall, bergman_positive, dyadic_fractional_maximal,
                                     dyadic_positive_operator, exp_maximal, fractional_maximal_bracket,
                                     orlicz_maximal, stopping_intervals, superlevel_measure,
                                     weighted_fractional_maximal)
from halfplane_lab.orlicz import power

W = ScaleWindow(-3, 2, -8, 8)
Z = 0.5 + 0.25j
CHI = box_indicator(0, 1)
ZERO = constant(0.0)
# 2-D adaptive quadrature (scipy dblquad) of the Bergman kernel over Q_[0,1) at z = 0.5 + 0.5i
BERGMAN_ORACLE = 1.1731832514164624


def test_params_critical_and_constants():
    P = Params.critical(2, 0, 0.5)
    assert P.q == pytest.approx(4.0)
    P.assert_critical()
    assert Params(2, 2, 0, 0).level_constant() == 68.0
    assert Params(2, 2, 0, 0).strong_constant() == pytest.approx(2 * 68.0)
    with pytest.raises(ValueError):
        Params(2, 2, -1, 0)
    with pytest.raises(ValueError):
        Params.critical(2, 0, 1.5)


def test_dyadic_maximal_examples():
    assert dyadic_fractional_maximal(CHI, Params(2, 2, 0, 0), 0, Z, W) == pytest.approx(1.0)
    assert dyadic_fractional_maximal(CHI, Params(2, 2, 0, 1), 0, Z, W) == pytest.approx(1.0)
    assert dyadic_fractional_maximal(ZERO, Params(), 0, Z, W) == 0.0


def test_bracket_example():
    P = Params()
    lo, up = fractional_maximal_bracket(CHI, P, Z, W)
    m = sum(dyadic_fractional_maximal(CHI, P, b, Z, W) for b in (0, "1/3"))
    assert lo >= 1.0 - 1e-12
    # the covering bound 36 (M^0 + M^1/3) is capped by the lattice bound
    assert up <= 36 * m * (1 + 1e-12)
    assert up >= lo
    assert fractional_maximal_bracket(ZERO, P, Z, W) == (0.0, 0.0)


pieces = st.lists(st.tuples(st.floats(-2, 2), st.floats(0.1, 2), st.floats(0.1, 3)), min_size=1, max_size=3)


@given(pieces, st.floats(-1, 1), st.floats(0.05, 2), st.sampled_from([0.0, 0.5]))
def test_bracket_ordering(bx, x, y, gamma):
    f = box_sum([(a, a + L) for a, L, _ in bx], [c for _, _, c in bx])
    lo, up = fractional_maximal_bracket(f, Params(2, 2, 0, gamma), complex(x, y), W)
    assert lo <= up * (1 + 1e-12)


def test_weighted_maximal_examples():
    assert weighted_fractional_maximal(CHI, constant(1.0), Params(), 0, Z, W) == pytest.approx(1.0)
    assert weighted_fractional_maximal(ZERO, constant(1.0), Params(), 0, Z, W) == 0.0


def test_exp_maximal_examples():
    assert exp_maximal(constant(2.5), 0.0, Z, W) == pytest.approx(2.5)
    f = product(power_y(1.0), CHI)
    assert log_box_integral(f, (0, 1), 0.0) == pytest.approx(-1.0)
    assert exp_maximal(f, 0.0, Z, W) >= math.exp(-1) * (1 - 1e-12)


def test_orlicz_maximal_examples():
    assert orlicz_maximal(CHI, power(2), 0.0, Z, W) == pytest.approx(1.0)
    assert orlicz_maximal(constant(3.0), power(2), 0.0, Z, W) == pytest.approx(3.0)


def test_bergman_oracle():
    P = Params()
    assert bergman_positive(CHI, P, 0.5 + 0.5j) == pytest.approx(BERGMAN_ORACLE, rel=1e-9)
    assert bergman_positive(ZERO, P, 0.5 + 0.5j) == 0.0


def test_dyadic_positive_chain_sum():
    # two boxes of the chain at or below [0,1) contribute 1 each, ancestors contribute 4**-k
    deep = ScaleWindow(-3, 30, -8, 8)
    assert dyadic_positive_operator(CHI, Params(), 0, Z, deep) == pytest.approx(2 + 1 / 3, rel=1e-12)
    assert dyadic_positive_operator(ZERO, Params(), 0, Z, deep) == 0.0


def test_stopping_family_examples():
    P = Params()
    Wst = ScaleWindow(-6, 6, -8, 8)
    fam = stopping_intervals(CHI, P, 0, 0.5, Wst)
    assert [(I.left, I.right) for I in fam.intervals] == [(0, 1)]
    assert fam.is_maximal()
    assert len(stopping_intervals(CHI, P, 0, 2.0, Wst)) == 0
    with pytest.raises(WindowTooSmall):
        stopping_intervals(CHI, P, 0, 1e-9, Wst)
    mu = BorelMeasure.weighted(constant(1.0), 0.0)
    assert superlevel_measure(CHI, P, 0, 0.5, mu, Wst) == pytest.approx(1.0)
    assert superlevel_measure(CHI, P, 0, 2.0, mu, Wst) == 0.0
