import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from halfplane_lab.fields import box_sum, constant, power_y, product, box_indicator
from halfplane_lab.orlicz import (SENTINEL, check_Bp, check_delta2, complementary, exponential, generic, holder_check,
                                  luxembourg_norm, power, power_conjugate_bump)

S = np.array([0.3, 0.8, 1.7, 2.5])


def test_complementary_quadratic():
    psi = complementary(generic(lambda t: t ** 2 / 2))
    assert np.allclose(psi(S), S ** 2 / 2, rtol=1e-4)


def test_complementary_cubic():
    psi = complementary(generic(lambda t: t ** 3 / 3))
    assert np.allclose(psi(S), S ** 1.5 / 1.5, rtol=1e-4)


def test_complementary_linear():
    psi = complementary(generic(lambda t: t))
    vals = psi(np.array([0.5, 0.99, 1.5]))
    assert vals[0] == 0 and vals[1] == 0 and vals[2] >= SENTINEL


@pytest.mark.parametrize("p, K", [(2.0, 4.0), (1.5, 2 ** 1.5)])
def test_delta2_power(p, K):
    holds, k = check_delta2(power(p))
    assert holds and k == pytest.approx(K, rel=1e-9)


def test_delta2_exponential_fails():
    assert check_delta2(exponential())[0] is False


def test_Bp_examples():
    assert check_Bp(power_conjugate_bump(2, 2), 2)[0] is True
    assert check_Bp(power(2), 2)[0] is False
    assert check_Bp(power(1), 2)[0] is True


def test_luxembourg_examples():
    assert luxembourg_norm(constant(2.5), (0, 1), power(2), 0.0) == pytest.approx(2.5, rel=1e-10)
    val = luxembourg_norm(product(power_y(1.0), box_indicator(0, 1)), (0, 1), power(2), 0.0)
    assert val == pytest.approx(3 ** -0.5, rel=1e-10)
    assert luxembourg_norm(constant(0.0), (0, 1), power(2), 0.0) == 0.0


def test_holder_constants():
    lhs, rhs, holds = holder_check(constant(1.0), constant(1.0), (0, 1), power(2), 0.0)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(0.5, rel=1e-9) and holds
    assert not holder_check(constant(1.0), constant(1.0), (0, 1), power(2), 0.0, constant=1.0)[2]


cells = st.lists(st.floats(0.0, 5.0), min_size=4, max_size=4)


@given(cells, cells, st.sampled_from([0.0, 1.0]))
def test_holder_random_whitney(cf, cg, alpha):
    pieces = [(0, 0.5), (0.5, 1), (0, 1), (0, 0.25)]
    f, g = box_sum(pieces, cf), box_sum(pieces, cg)
    if f.is_zero or g.is_zero:
        return
    assert holder_check(f, g, (0, 1), power(3), alpha)[2]
