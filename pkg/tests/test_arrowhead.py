import numpy as np
import pytest
from hypothesis import given, strategies as st

from goldenrule.arrowhead import arrowhead_eigh


def dense(a, z, d):
    n = d.size + 1
    H = np.zeros((n, n))
    H[0, 0] = a
    H[0, 1:] = H[1:, 0] = z
    H[np.arange(1, n), np.arange(1, n)] = d
    return H


def check(a, z, d, tol=1e-11):
    res = arrowhead_eigh(a, z, d)
    H = dense(a, z, d)
    w = np.linalg.eigvalsh(H)
    scale = max(1.0, np.abs(w).max())
    assert np.abs(res.eigenvalues - w).max() <= tol * scale
    Q = res.matrix()
    assert np.abs(Q.T @ Q - np.eye(d.size + 1)).max() <= 1e-10
    assert np.abs(H @ Q - Q * res.eigenvalues).max() <= 1e-10 * scale
    return res


def test_equidistant_levels():
    d = np.arange(-200, 201, dtype=float)
    check(0.3, np.full(d.size, 0.15), d)


def test_head_on_a_pole():
    d = np.arange(-50, 51, dtype=float)
    check(0.0, np.full(d.size, 0.1), d)


def test_tiny_and_large_couplings():
    d = np.arange(-30, 31, dtype=float)
    check(0.25, np.full(d.size, 1e-6), d)
    check(0.25, np.full(d.size, 5.0), d)


def test_single_level():
    res = check(0.5, np.array([0.2]), np.array([1.0]))
    assert res.eigenvalues.size == 2


def test_rejects_degenerate_input():
    with pytest.raises(ValueError):
        arrowhead_eigh(0.0, np.ones(3), np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        arrowhead_eigh(0.0, np.array([1.0, 0.0, 1.0]), np.array([0.0, 1.0, 2.0]))


@given(
    st.integers(1, 40),
    st.floats(-5, 5),
    st.floats(1e-3, 3),
    st.integers(0, 2**31 - 1),
)
def test_matches_dense_random(n, a, zscale, seed):
    rng = np.random.default_rng(seed)
    d = np.cumsum(rng.uniform(0.05, 1.0, n)) - n / 4
    z = zscale * rng.uniform(0.1, 1.0, n) * rng.choice([-1, 1], n)
    check(a, z, d)
