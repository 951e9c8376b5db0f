"""Hot inner loops: nearest-centroid assignment and cluster accumulation.

Both the grid oracle and the Monte Carlo energy estimate spend nearly
all their time scanning every node against every centroid. The scan is
compiled with numba when it is importable; setting CVT_DISABLE_NUMBA=1
(or running where numba is absent) selects a chunked numpy fallback with
identical semantics. ``benchmarks/kernel_bench.py`` times one against
the other.

Ties in the nearest-centroid scan resolve to the lowest centroid index
in both backends, so assignments are reproducible.
"""

import os

import numpy as np

try:
    from numba import njit, prange

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on the environment
    NUMBA_AVAILABLE = False

_DISABLED = os.environ.get("CVT_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false")
USE_NUMBA = NUMBA_AVAILABLE and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"

_CHUNK = 8192  # numpy fallback block size; keeps the distance matrix small


def _nearest_assign_numpy(points, centroids):
    m = points.shape[0]
    labels = np.empty(m, dtype=np.int64)
    dist_sq = np.empty(m, dtype=np.float64)
    for start in range(0, m, _CHUNK):
        block = points[start : start + _CHUNK]
        # (chunk, N) squared distances; argmin picks the lowest index on ties
        d2 = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        idx = np.argmin(d2, axis=1)
        labels[start : start + _CHUNK] = idx
        dist_sq[start : start + _CHUNK] = d2[np.arange(block.shape[0]), idx]
    return labels, dist_sq


def _accumulate_numpy(points, weights, labels, n_clusters):
    mass = np.bincount(labels, weights=weights, minlength=n_clusters)
    moment = np.empty((n_clusters, points.shape[1]), dtype=np.float64)
    for i in range(points.shape[1]):
        moment[:, i] = np.bincount(labels, weights=weights * points[:, i], minlength=n_clusters)
    return mass, moment


if NUMBA_AVAILABLE:

    @njit(cache=True, parallel=True)
    def _nearest_assign_numba(points, centroids, labels, dist_sq):
        m, ndim = points.shape
        n = centroids.shape[0]
        for p in prange(m):
            best = 0
            best_d = np.inf
            for c in range(n):
                d = 0.0
                for i in range(ndim):
                    diff = points[p, i] - centroids[c, i]
                    d += diff * diff
                if d < best_d:
                    best_d = d
                    best = c
            labels[p] = best
            dist_sq[p] = best_d

    @njit(cache=True)
    def _accumulate_numba(points, weights, labels, mass, moment):
        m, ndim = points.shape
        for p in range(m):
            c = labels[p]
            w = weights[p]
            mass[c] += w
            for i in range(ndim):
                moment[c, i] += w * points[p, i]


def nearest_assign(points, centroids):
    """Label each point with its nearest centroid (lowest index on ties).

    Returns (labels, dist_sq): int64 indices into ``centroids`` and the
    squared distance to the chosen centroid.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    if points.ndim != 2 or centroids.ndim != 2 or points.shape[1] != centroids.shape[1]:
        raise ValueError("points and centroids must be 2D with matching last dimension")
    if USE_NUMBA:
        labels = np.empty(points.shape[0], dtype=np.int64)
        dist_sq = np.empty(points.shape[0], dtype=np.float64)
        _nearest_assign_numba(points, centroids, labels, dist_sq)
        return labels, dist_sq
    return _nearest_assign_numpy(points, centroids)


def accumulate_clusters(points, weights, labels, n_clusters):
    """Per-cluster total weight and weighted coordinate sums.

    The accumulation order is fixed (point order), so results are
    bit-reproducible run to run.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if USE_NUMBA:
        mass = np.zeros(n_clusters, dtype=np.float64)
        moment = np.zeros((n_clusters, points.shape[1]), dtype=np.float64)
        _accumulate_numba(points, weights, labels, mass, moment)
        return mass, moment
    return _accumulate_numpy(points, weights, labels, n_clusters)


def set_threads(n: int) -> None:
    """Cap the compiled backend's thread count; no-op on the numpy path."""
    if USE_NUMBA and n > 0:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
