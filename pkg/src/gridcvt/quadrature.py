"""Scalar adaptive quadrature and Gauss-Legendre node tables.

The adaptive Simpson routine is the workhorse behind every density
integral that has no closed form. Centroids computed from these
integrals feed a Newton solve, so the default absolute tolerance sits
well below the solver tolerance.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

DEFAULT_ABS_TOL = 1e-12
MAX_DEPTH = 60


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, m, b, fa, fm, fb, whole, tol, depth_left):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    delta = left + right - whole
    # Richardson: halving Simpson gains a factor 16, so |delta|/15 bounds the error
    if depth_left <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    half = 0.5 * tol
    return _adaptive(f, a, lm, m, fa, flm, fm, left, half, depth_left - 1) + _adaptive(
        f, m, rm, b, fm, frm, fb, right, half, depth_left - 1
    )


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_ABS_TOL,
    max_depth: int = MAX_DEPTH,
) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Recursive Simpson with Richardson correction; the recursion depth is
    capped at ``max_depth`` so pathological integrands terminate with the
    best available estimate rather than hanging.
    """
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = _simpson(fa, fm, fb, b - a)
    return _adaptive(f, a, m, b, fa, fm, fb, whole, tol, max_depth)


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``order``-point Gauss-Legendre on [-1, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def segment_gl_nodes(edges: np.ndarray, order) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for every segment between consecutive edges.

    ``order`` is one point count for all segments, or one per segment.
    Returns flat arrays, segment by segment in ascending order. Used for
    composite quadrature that must respect interior breakpoints where an
    integrand kinks.
    """
    edges = np.asarray(edges, dtype=np.float64)
    orders = np.broadcast_to(np.asarray(order, dtype=int), (edges.size - 1,))
    nodes_out = []
    weights_out = []
    for lo, hi, q in zip(edges[:-1], edges[1:], orders):
        xi, wi = gauss_legendre(int(q))
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes_out.append(mid + half * xi)
        weights_out.append(half * wi)
    return np.concatenate(nodes_out), np.concatenate(weights_out)
