import math

import numpy as np
import pytest

from gridcvt.quadrature import adaptive_simpson, gauss_legendre, segment_gl_nodes


def test_simpson_exact_on_cubic():
    # Simpson integrates cubics exactly, so no recursion is needed
    assert adaptive_simpson(lambda x: x**3, 0.0, 1.0) == pytest.approx(0.25, abs=1e-15)


def test_simpson_sine():
    assert adaptive_simpson(math.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-12)


def test_simpson_flipped_bounds_negates():
    fwd = adaptive_simpson(math.exp, 0.0, 1.0)
    assert adaptive_simpson(math.exp, 1.0, 0.0) == -fwd


def test_simpson_empty_interval():
    assert adaptive_simpson(math.exp, 2.0, 2.0) == 0.0


def test_simpson_nonsmooth_integrand():
    # sqrt has an endpoint singularity in its derivative; needs deep subdivision
    val = adaptive_simpson(math.sqrt, 0.0, 1.0, tol=1e-12)
    assert val == pytest.approx(2.0 / 3.0, abs=1e-9)


def test_simpson_depth_cap_terminates():
    val = adaptive_simpson(math.sqrt, 0.0, 1.0, tol=1e-15, max_depth=3)
    assert math.isfinite(val)
    # shallow recursion is worse than the default, but not wildly off
    assert val == pytest.approx(2.0 / 3.0, abs=1e-3)


def test_gauss_legendre_polynomial_exactness():
    # order q is exact through degree 2q-1
    x, w = gauss_legendre(6)
    assert np.dot(w, x**10) == pytest.approx(2.0 / 11.0, abs=1e-14)
    assert np.dot(w, x**11) == pytest.approx(0.0, abs=1e-14)


def test_gauss_legendre_cached():
    assert gauss_legendre(5)[0] is gauss_legendre(5)[0]


def test_segment_nodes_weights_sum_to_width():
    edges = np.array([0.0, 0.3, 0.7, 2.0])
    nodes, w = segment_gl_nodes(edges, 5)
    assert w.sum() == pytest.approx(2.0, abs=1e-14)
    assert nodes.size == 15
    assert np.all((nodes > 0.0) & (nodes < 2.0))


def test_segment_nodes_per_segment_orders():
    edges = np.array([0.0, 1.0, 2.0])
    nodes, w = segment_gl_nodes(edges, [3, 7])
    assert nodes.size == 10
    assert w[:3].sum() == pytest.approx(1.0, abs=1e-14)
    assert w[3:].sum() == pytest.approx(1.0, abs=1e-14)


def test_segment_nodes_integrate_kinked_function_exactly():
    # |x - 0.5| is polynomial on each side of the kink, so splitting there is exact
    edges = np.array([0.0, 0.5, 1.0])
    nodes, w = segment_gl_nodes(edges, 4)
    assert np.dot(w, np.abs(nodes - 0.5)) == pytest.approx(0.25, abs=1e-15)
