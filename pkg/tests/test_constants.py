import pytest

from halfplane_lab.constants import (NonIntegrable, bekolle_bonami, bekolle_infinity, box_mass_sequence,
                                     carleson_sequence_constant, class_constant, sawyer_testing)
from halfplane_lab.fields import BorelMeasure, constant, power_y
from halfplane_lab.geometry import DyadicInterval, ScaleWindow
from halfplane_lab.operators import Params

W = ScaleWindow(-3, 1, -2, 2)
# band-exact evaluation, cross-checked against the layer-cake sum
SAWYER_UNIT = 1.118006692665008


def test_Bp_examples():
    assert bekolle_bonami(constant(1.0), 2, 0.0, W).value == pytest.approx(1.0)
    assert bekolle_bonami(power_y(0.5), 2, 0.0, W).value == pytest.approx(4 / 3, rel=1e-12)


@pytest.mark.parametrize("t", [-0.7, -0.25, 0.3, 0.9])
def test_Bp_power_family(t):
    rep = bekolle_bonami(power_y(t), 2, 0.0, W)
    assert rep.value == pytest.approx(1 / (1 - t * t), rel=1e-10)
    assert rep.refinement_delta == pytest.approx(0.0, abs=1e-10)


def test_Bp_nonintegrable():
    with pytest.raises(NonIntegrable):
        bekolle_bonami(power_y(1.0), 2, 0.0, W)


def test_Binf_unit_weight():
    rep = bekolle_infinity(constant(1.0), 0.0, ScaleWindow(-4, 0, 0, 1))
    assert rep.variants["dyadic"] == pytest.approx(1.0, rel=1e-12)
    assert 1.0 <= rep.value <= 2 * 6.0 ** 2


def test_class_examples():
    P = Params(2, 2, 0, 0)
    one = constant(1.0)
    mu = BorelMeasure.weighted(one, 0.0)
    assert class_constant("A_pq", one, one, P, W).value == pytest.approx(1.0)
    assert class_constant("weak_class", one, mu, P, W).value == pytest.approx(1.0)
    half = power_y(0.5)
    assert class_constant("weak_class", half, BorelMeasure.weighted(half, 0.0), P, W).value == pytest.approx(4 / 3)
    assert class_constant("B_pq_joint", None, power_y(0.2), Params.critical(2, 0, 0.5), W).value == \
        pytest.approx(125 / 81, rel=1e-10)
    with pytest.raises(ValueError):
        class_constant("nope", one, one, P, W)


def test_sawyer_unit_weight():
    Wl, TW = ScaleWindow(-6, 3, -8, 8), ScaleWindow(-3, 0, -1, 1)
    mu = BorelMeasure.weighted(constant(1.0), 0)
    P = Params(2, 2, 0, 0)
    exact = sawyer_testing(constant(1.0), mu, P, 0, Wl, test_window=TW, exact=True).value
    assert exact == pytest.approx(SAWYER_UNIT, rel=1e-9)
    layer = sawyer_testing(constant(1.0), mu, P, 0, Wl, test_window=TW).value
    assert layer == pytest.approx(exact, rel=0.02)
    assert sawyer_testing(constant(0.0), mu, P, 0, Wl, test_window=TW).value == 0.0


def test_carleson_examples():
    one = constant(1.0)
    deep = ScaleWindow(-10, 0, 0, 1)
    rep = carleson_sequence_constant(box_mass_sequence(one, 0.0), one, 0.0, 1.0, deep)
    assert rep.value == pytest.approx(2.0, rel=1e-3)
    J = DyadicInterval(-1, 0, 0)
    single = carleson_sequence_constant({J: 0.25}, one, 0.0, 1.0, deep, grids=[0])
    assert single.value == pytest.approx(1.0)
    with pytest.raises(ValueError):
        carleson_sequence_constant({J: 1.0}, one, 0.0, 0.5, deep)
