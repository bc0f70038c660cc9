from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from halfplane_lab.geometry import (SHIFTS, DyadicInterval, ScaleWindow, as_shift, box_measure_alpha,
                                    boxes_containing, containing_dyadic, interval_endpoints,
                                    top_half_measure_alpha, whitney_cells)

F = Fraction
shifts = st.sampled_from(SHIFTS)
intervals = st.builds(DyadicInterval, st.integers(-12, 12), st.integers(-200, 200), shifts)


def test_endpoint_examples():
    assert interval_endpoints(0, 0, 0) == (0, 1)
    assert interval_endpoints(0, 0, F(1, 3)) == (F(1, 3), F(4, 3))
    assert interval_endpoints(1, 0, F(1, 3)) == (F(-2, 3), F(4, 3))


def test_shift_normalization():
    assert as_shift(1 / 3) == F(1, 3)
    assert as_shift("1/3") == F(1, 3)
    with pytest.raises(ValueError):
        as_shift(0.5)


@given(intervals)
def test_parent_child_roundtrip(I):
    left, right = I.children()
    assert left.parent() == I and right.parent() == I
    assert left.left == I.left and left.right == right.left and right.right == I.right


@given(intervals, intervals)
def test_same_grid_nested_or_disjoint(I, J):
    J = DyadicInterval(J.j, J.m, I.beta)
    disjoint = I.right <= J.left or J.right <= I.left
    assert disjoint or I.contains(J) or J.contains(I)


def test_containing_dyadic_examples():
    beta, J = containing_dyadic((0.4, 0.6))
    assert beta == 0 and (J.left, J.right) == (0, 1)
    beta, J = containing_dyadic((0, 1))
    assert beta == 0 and (J.left, J.right) == (0, 1)
    # no D^0 interval of length <= 1.2 contains [0.9, 1.1); the shorter D^{1/3} choice wins the tie-break
    beta, J = containing_dyadic((0.9, 1.1))
    assert beta == F(1, 3) and J.length <= F(6, 5) and J.left <= F(9, 10) and F(11, 10) <= J.right
    assert (J.left, J.right) == (F(5, 6), F(4, 3))


@given(st.fractions(min_value=-1000, max_value=1000, max_denominator=10 ** 6),
       st.fractions(min_value=F(1, 10 ** 6), max_value=1000, max_denominator=10 ** 6))
def test_containing_dyadic_covers(a, L):
    beta, J = containing_dyadic((a, a + L))
    assert J.beta == beta
    assert J.left <= a and a + L <= J.right
    assert J.length <= 6 * L


def test_box_measures():
    assert box_measure_alpha(1, 0) == 1.0
    assert box_measure_alpha(1, 1) == 0.5
    assert box_measure_alpha(2, 0) == 4.0
    assert top_half_measure_alpha(1, 0) == 0.5
    assert top_half_measure_alpha(1, 1) == 0.375
    for L in (0.3, 5.0):
        for a in (-0.5, 0.0, 2.0):
            assert top_half_measure_alpha(L, a) / box_measure_alpha(L, a) == pytest.approx(1 - 2 ** (-(1 + a)))
    with pytest.raises(ValueError):
        box_measure_alpha(1, -1)


def test_boxes_containing_examples():
    W = ScaleWindow(-3, 2, -8, 8)
    chain = boxes_containing(0.5 + 0.25j, 0, W)
    assert [(I.left, I.right) for I in chain] == [(F(1, 2), 1), (0, 1), (0, 2), (0, 4)]
    assert all(a.parent() == b for a, b in zip(chain, chain[1:]))
    assert boxes_containing(0.5 + 4j, 0, W) == []


def test_whitney_cells_example_and_additivity():
    cells = whitney_cells(ScaleWindow(-1, 0, 0, 1), 0)
    assert sorted((I.left, I.right) for I in cells) == [(0, F(1, 2)), (0, 1), (F(1, 2), 1)]
    W = ScaleWindow(-6, 0, 0, 1)
    for a in (0.0, 1.0, -0.5):
        tops = sum(top_half_measure_alpha(float(I.length), a) for I in whitney_cells(W, 0))
        # bottom halves of the 64 finest boxes
        strip = 2 ** 6 * box_measure_alpha(2.0 ** -6, a) * 2.0 ** (-(1 + a))
        assert tops + strip == pytest.approx(box_measure_alpha(1.0, a), rel=1e-12)


@given(st.integers(-5, 5), st.integers(-5, 5), shifts)
def test_top_halves_disjoint(m1, m2, beta):
    W = ScaleWindow(-3, 1, -2, 2)
    cells = whitney_cells(W, beta)
    I, J = cells[m1 % len(cells)], cells[m2 % len(cells)]
    if I != J:
        same_scale_overlap = I.j == J.j and not (I.right <= J.left or J.right <= I.left)
        assert not same_scale_overlap
