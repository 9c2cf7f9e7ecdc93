import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from goldenrule import DomainError, ParameterError, derive_params, to_dimensionless, to_physical
from goldenrule.params import heisenberg_grid, interval_index, offset_parameter, on_boundary

finite = st.floats(-1e3, 1e3, allow_nan=False)
spacing = st.floats(1e-2, 1e2)
coupling = st.floats(0, 10)


def test_half_integer_offset_zero_coupling():
    p = derive_params(0.5, 1.0, 0.0)
    assert p.alpha == 0.5
    assert p.gamma == 0.0
    assert p.t_h == 2 * math.pi


def test_three_sevenths():
    assert derive_params(3 / 7, 1.0, 0.1).alpha == pytest.approx(3 / 7, abs=1e-15)


def test_negative_energy_floor():
    assert derive_params(-1.25, 1.0, 0.15).alpha == 0.75


def test_derived_quantities():
    p = derive_params(0.3, 2.0, 0.5)
    assert p.theta == pytest.approx(2 * math.pi * 0.15)
    assert p.gamma == pytest.approx(2 * math.pi * 0.25 / 2.0)
    assert p.t_h == pytest.approx(math.pi)


@pytest.mark.parametrize(
    "args",
    [(0.0, 0.0, 0.1), (0.0, -1.0, 0.1), (0.0, 1.0, -0.1), (math.nan, 1.0, 0.1), (0.0, math.inf, 0.1), (0.0, 1.0, math.nan)],
)
def test_invalid_parameters(args):
    with pytest.raises(ParameterError):
        derive_params(*args)


def test_alpha_snap_near_one():
    # 1 - 1e-14 rounds to an offset indistinguishable from a full spacing
    assert offset_parameter(1.0 - 1e-14, 1.0) == 0.0
    assert offset_parameter(-1e-15, 1.0) == 0.0


def test_to_dimensionless_examples():
    p = derive_params(0.3, 1.0, 0.1)
    d = to_dimensionless(p.t_h, p)
    assert d.T == pytest.approx(math.pi) and d.m == 0
    d = to_dimensionless(0.0, p)
    assert d.T == 0.0 and d.m == 0
    d = to_dimensionless(2.5 * p.t_h, p)
    assert d.T == pytest.approx(2.5 * math.pi) and d.m == 2


def test_to_dimensionless_negative():
    with pytest.raises(DomainError):
        to_dimensionless(-1.0, derive_params(0.0, 1.0, 0.1))


def test_interval_index_left_convention():
    x = np.array([0.0, 0.5, 1.0, 1.0 + 1e-9, 2.0, 2.5, 3.0])
    assert list(interval_index(x, 1.0)) == [0, 0, 0, 1, 1, 2, 2]
    assert list(on_boundary(x, 1.0)) == [False, False, True, False, True, False, True]


def test_heisenberg_grid_hits_boundaries():
    t_h = 2 * math.pi / 0.7
    g = heisenberg_grid(t_h, 3, 200)
    assert g.size == 601
    assert all(on_boundary(g[[200, 400, 600]], t_h))
    assert list(interval_index(g[[199, 200, 201]], t_h)) == [0, 0, 1]


@given(finite, spacing, st.integers(-50, 50))
def test_alpha_periodic(e_b, delta, k):
    a = derive_params(e_b, delta, 0.1).alpha
    b = derive_params(e_b + k * delta, delta, 0.1).alpha
    # periodic on the circle; rounding of e_b + k delta may move across 0
    d = abs(a - b)
    assert min(d, 1 - d) <= 1e-9 * max(1.0, abs(e_b / delta) + abs(k))


@given(finite, spacing, coupling)
def test_alpha_range(e_b, delta, g):
    p = derive_params(e_b, delta, g)
    assert 0.0 <= p.alpha < 1.0
    assert 0.0 <= p.theta < 2 * math.pi
    assert p.gamma >= 0 and p.t_h > 0


@given(st.floats(0, 1e6, allow_subnormal=False), spacing)
def test_time_round_trip(t, delta):
    p = derive_params(0.0, delta, 0.1)
    back = to_physical(to_dimensionless(t, p).T, p)
    assert back == pytest.approx(t, rel=1e-12, abs=0)


@given(spacing, st.floats(1e-4, 10))
def test_gamma_quadratic(delta, g):
    a = derive_params(0.0, delta, g).gamma
    b = derive_params(0.0, delta, 2 * g).gamma
    assert b == pytest.approx(4 * a, rel=1e-12)


@given(st.floats(0, 100))
def test_interval_consistent(T):
    m = to_dimensionless(2 * T, derive_params(0.0, 1.0, 0.1)).m
    if T > 0:
        assert m * math.pi < T * (1 + 1e-12) and T <= (m + 1) * math.pi * (1 + 1e-12)
