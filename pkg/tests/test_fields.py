import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from halfplane_lab.fields import (BorelMeasure, DomainError, box_indicator, box_sum, constant, half_disk,
                                  half_disk_moment, integrate_box, integrate_rect_generic, lp_norm,
                                  measure_of_box, power_abs, power_y, product, scale, total_integral)
from halfplane_lab.geometry import ScaleWindow

R_INV_UNIT_BOX = 2 * math.log(1 + math.sqrt(2))


def test_integrate_box_examples():
    assert integrate_box(constant(1.0), (0, 1), 0)[0] == 1.0
    assert integrate_box(power_y(1.0), (0, 1), 0)[0] == pytest.approx(0.5, rel=1e-14)


def test_integrate_box_singular_oracle():
    # independent polar oracle: int_0^{pi/4} 2 sec(theta) d theta over the two symmetric triangles
    oracle = 2 * quad(lambda th: 1 / math.cos(th), 0, math.pi / 4, epsrel=1e-14)[0]
    assert oracle == pytest.approx(R_INV_UNIT_BOX, rel=1e-13)
    assert integrate_box(power_abs(-1.0), (0, 1), 0)[0] == pytest.approx(R_INV_UNIT_BOX, rel=1e-10)


@pytest.mark.parametrize("field", [power_y(0.5), power_abs(0.7), product(power_y(-0.3), box_indicator(0.2, 0.9))])
@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5])
def test_exact_matches_generic(field, alpha):
    exact = integrate_box(field, (-0.5, 1.5), alpha)[0]
    generic = integrate_rect_generic(field, -0.5, 1.5, 0.0, 2.0, alpha)[0]
    assert exact == pytest.approx(generic, rel=1e-8)


def test_measure_examples():
    assert measure_of_box(BorelMeasure.weighted(constant(1.0), 0.0), (0, 1)) == 1.0
    atom = BorelMeasure.point_masses([(0.5 + 0.5j, 3.0)])
    assert measure_of_box(atom, (0, 1)) == 3.0
    # Q_I is open at the top, so y = |I| is excluded
    assert measure_of_box(atom, (0.5, 1)) == 0.0
    assert measure_of_box(atom, (0, 0.5)) == 0.0
    assert measure_of_box(BorelMeasure.weighted(power_y(1.0), 0.0), (0, 2)) == pytest.approx(4.0, rel=1e-14)


def test_measure_rejects_bad_atoms():
    with pytest.raises(ValueError):
        BorelMeasure.point_masses([(0.5 - 0.5j, 1.0)])


def test_lp_norm_example():
    # the window misses the strip below height 2**-13, of area 2**-13
    W = ScaleWindow(-12, 0, 0, 1)
    val, flag = lp_norm(box_indicator(0, 1), constant(1.0), 2, 0.0, W)
    assert val ** 2 == pytest.approx(1 - 2.0 ** -13, rel=1e-13)
    assert val == pytest.approx(1.0, rel=1e-4) and flag


@pytest.mark.parametrize("eps", [0.2, 0.1])
def test_power_norm_matches_polar_closed_form(eps):
    # |z|^{-(2-eps)/2} on the unit half-disk, p = 2, alpha = 0: squared norm is pi / eps
    f = product(power_abs(-(2 - eps) / 2), half_disk(1.0))
    assert total_integral(f.power(2), 0.0) == pytest.approx(math.pi / eps, rel=1e-9)
    assert half_disk_moment(-(2 - eps), 0.0) == pytest.approx(math.pi / eps, rel=1e-12)


@pytest.mark.parametrize("s", [0.0, 1.0, -1.5])
def test_half_disk_moment(s):
    assert half_disk_moment(s, 0.0) == pytest.approx(math.pi / (s + 2), rel=1e-12)


def test_half_disk_moment_divergent():
    assert half_disk_moment(-2.0, 0.0) == math.inf


boxes = st.lists(st.tuples(st.floats(-3, 3), st.floats(0.05, 2)), min_size=1, max_size=4)


@given(boxes, st.floats(0.1, 3), st.sampled_from([0.0, 1.0]))
def test_box_sum_linearity(bx, c, alpha):
    pairs = [(a, a + L) for a, L in bx]
    coefs = [1.0 + k for k in range(len(pairs))]
    f = box_sum(pairs, coefs)
    whole = integrate_box(scale(c, f), (-4, 4), alpha)[0]
    parts = sum(c * k * integrate_box(box_indicator(a, b), (-4, 4), alpha)[0] for (a, b), k in zip(pairs, coefs))
    assert whole == pytest.approx(parts, rel=1e-12)


def test_total_integral_requires_compact_support():
    with pytest.raises(DomainError):
        total_integral(power_y(1.0), 0.0)


def test_pointwise_evaluation():
    f = product(power_y(0.5), box_indicator(0, 1))
    assert f.at(0.5 + 0.25j) == pytest.approx(0.5)
    assert f.at(0.5 + 2j) == 0.0
    assert np.allclose(power_abs(2.0)(np.array([3.0]), np.array([4.0])), 25.0)
