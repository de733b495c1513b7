import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bfsplate.quadrature import exactness_degree, gauss_legendre, gauss_lobatto, tensorize


def test_midpoint():
    r = gauss_legendre(1)
    assert np.allclose(r.nodes, [0.5]) and np.allclose(r.weights, [1.0])


def test_two_point_gauss():
    r = gauss_legendre(2)
    s = 1 / math.sqrt(3)
    assert np.allclose(r.nodes, [(1 - s) / 2, (1 + s) / 2], atol=1e-16)
    assert np.allclose(r.weights, [0.5, 0.5], atol=1e-16)


def test_gauss3_t5():
    assert abs(gauss_legendre(3).integrate(lambda t: t**5) - 1 / 6) < 1e-15


def test_lobatto_small():
    r = gauss_lobatto(2)
    assert np.array_equal(r.nodes, [0.0, 1.0]) and np.allclose(r.weights, [0.5, 0.5])
    r = gauss_lobatto(3)
    assert np.allclose(r.nodes, [0, 0.5, 1], atol=1e-16)
    assert np.allclose(r.weights, [1 / 6, 2 / 3, 1 / 6], atol=1e-16)
    assert abs(gauss_lobatto(4).integrate(lambda t: t**5) - 1 / 6) < 1e-15


@pytest.mark.parametrize("n", range(1, 9))
def test_gauss_matches_numpy(n):
    # independent oracle: numpy's Golub-Welsch nodes on [-1, 1]
    x, w = np.polynomial.legendre.leggauss(n)
    r = gauss_legendre(n)
    assert np.allclose(r.nodes, (x + 1) / 2, atol=1e-15)
    assert np.allclose(r.weights, w / 2, atol=1e-15)


@pytest.mark.parametrize("n", range(2, 9))
def test_lobatto_interior_nodes(n):
    # interior Lobatto nodes are the roots of P'_{n-1}
    if n == 2:
        return
    d = np.polynomial.legendre.Legendre.basis(n - 1).deriv()
    roots = np.sort(d.roots().real)
    assert np.allclose(gauss_lobatto(n).nodes[1:-1], (roots + 1) / 2, atol=1e-14)


@pytest.mark.parametrize("maker, lo, hi, deg", [(gauss_legendre, 1, 8, lambda n: 2 * n - 1), (gauss_lobatto, 2, 8, lambda n: 2 * n - 3)])
def test_monomial_exactness(maker, lo, hi, deg):
    for n in range(lo, hi + 1):
        r = maker(n)
        for m in range(deg(n) + 1):
            assert abs(r.weights @ r.nodes**m - 1 / (m + 1)) < 1e-14, (n, m)
        # and not one degree more
        m = deg(n) + 1
        assert abs(r.weights @ r.nodes**m - 1 / (m + 1)) > 1e-12


def test_exactness_degree():
    assert exactness_degree(gauss_legendre(4)) == 7
    assert exactness_degree(gauss_lobatto(4), lobatto=True) == 5


@pytest.mark.parametrize("n", [0, 9])
def test_unsupported_gauss(n):
    with pytest.raises(ValueError):
        gauss_legendre(n)


@pytest.mark.parametrize("n", [1, 9])
def test_unsupported_lobatto(n):
    with pytest.raises(ValueError):
        gauss_lobatto(n)


@given(st.integers(1, 8))
def test_positive_increasing_gauss(n):
    r = gauss_legendre(n)
    assert np.all(r.weights > 0) and np.all(np.diff(r.nodes) > 0)
    assert abs(r.weights.sum() - 1) < 1e-15


@given(st.integers(2, 8))
def test_positive_increasing_lobatto(n):
    r = gauss_lobatto(n)
    assert np.all(r.weights > 0) and np.all(np.diff(r.nodes) > 0)
    assert r.nodes[0] == 0.0 and r.nodes[-1] == 1.0


def test_tensorize():
    t = tensorize(gauss_legendre(1))
    assert np.allclose(t.points, [[0.5, 0.5]]) and np.allclose(t.weights, [1.0])
    t = tensorize(gauss_legendre(2))
    assert t.weights.shape == (4,) and np.allclose(t.weights, 0.25)
    assert abs(t.weights @ (t.x**3 * t.y**3) - 1 / 16) < 1e-15


@given(st.integers(1, 8))
def test_tensor_weights_sum(n):
    t = tensorize(gauss_legendre(n))
    assert len(t.weights) == n * n and abs(t.weights.sum() - 1) < 1e-14


def test_on_interval():
    x, w = gauss_legendre(3).on_interval(2.0, 5.0)
    assert abs(w @ x**2 - (125 - 8) / 3) < 1e-12
