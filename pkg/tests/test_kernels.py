"""Assignment/accumulation kernels: the compiled path and the numpy
fallback must be interchangeable."""

import numpy as np
import pytest

from gridcvt import kernels


def random_cloud(m, ndim, seed):
    rng = np.random.default_rng(seed)
    points = rng.uniform(-1.0, 2.0, size=(m, ndim))
    centroids = rng.uniform(0.0, 1.0, size=(7, ndim))
    return points, centroids


def test_backend_is_declared():
    assert kernels.BACKEND in ("numba", "numpy")
    assert kernels.USE_NUMBA == (kernels.BACKEND == "numba")


def test_nearest_assign_small_exact():
    points = np.array([[0.1, 0.0], [1.9, 0.0], [0.6, 0.4]])
    centroids = np.array([[0.0, 0.0], [2.0, 0.0]])
    labels, dist_sq = kernels.nearest_assign(points, centroids)
    assert labels.dtype == np.int64 and dist_sq.dtype == np.float64
    assert labels.tolist() == [0, 1, 0]
    assert dist_sq[0] == pytest.approx(0.01, abs=1e-15)
    assert dist_sq[2] == pytest.approx(0.36 + 0.16, abs=1e-15)


def test_tie_goes_to_lowest_index():
    labels, _ = kernels.nearest_assign(
        np.array([[1.0, 0.0]]), np.array([[0.0, 0.0], [2.0, 0.0]])
    )
    assert labels[0] == 0


def test_backends_agree_on_large_cloud():
    # 10k points crosses the fallback's chunk boundary at 8192
    points, centroids = random_cloud(10_000, 3, seed=11)
    labels, dist_sq = kernels.nearest_assign(points, centroids)
    ref_labels, ref_dist = kernels._nearest_assign_numpy(points, centroids)
    assert np.array_equal(labels, ref_labels)
    assert np.allclose(dist_sq, ref_dist, rtol=0.0, atol=1e-12)


def test_accumulate_matches_bincount():
    points, centroids = random_cloud(5_000, 2, seed=5)
    weights = np.random.default_rng(6).uniform(0.5, 1.5, size=5_000)
    labels, _ = kernels.nearest_assign(points, centroids)
    mass, moment = kernels.accumulate_clusters(points, weights, labels, 7)
    ref_mass = np.bincount(labels, weights=weights, minlength=7)
    assert np.allclose(mass, ref_mass, rtol=1e-13)
    for i in range(2):
        ref = np.bincount(labels, weights=weights * points[:, i], minlength=7)
        assert np.allclose(moment[:, i], ref, rtol=1e-13)
    # empty clusters are possible and must come back as zeros, not NaN
    mass2, moment2 = kernels.accumulate_clusters(points, weights, labels, 9)
    assert mass2[7] == 0.0 and mass2[8] == 0.0
    assert np.all(moment2[7:] == 0.0)


def test_accumulate_backends_agree():
    points, _ = random_cloud(9_000, 4, seed=12)
    weights = np.random.default_rng(13).uniform(0.1, 1.0, size=9_000)
    labels = np.random.default_rng(14).integers(0, 5, size=9_000)
    a_mass, a_mom = kernels.accumulate_clusters(points, weights, labels, 5)
    b_mass, b_mom = kernels._accumulate_numpy(
        points, weights, labels.astype(np.int64), 5
    )
    assert np.allclose(a_mass, b_mass, rtol=1e-12)
    assert np.allclose(a_mom, b_mom, rtol=1e-12)


def test_rejects_mismatched_shapes():
    with pytest.raises(ValueError):
        kernels.nearest_assign(np.zeros((3, 2)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        kernels.nearest_assign(np.zeros(3), np.zeros((2, 3)))


def test_accepts_non_contiguous_input():
    points, centroids = random_cloud(500, 2, seed=21)
    sliced = points[::2]
    assert not sliced.flags.c_contiguous
    labels, _ = kernels.nearest_assign(sliced, centroids)
    ref, _ = kernels._nearest_assign_numpy(np.ascontiguousarray(sliced), centroids)
    assert np.array_equal(labels, ref)


def test_set_threads_is_safe():
    kernels.set_threads(1)
    kernels.set_threads(4)
    points, centroids = random_cloud(1_000, 2, seed=31)
    a, _ = kernels.nearest_assign(points, centroids)
    kernels.set_threads(1)
    b, _ = kernels.nearest_assign(points, centroids)
    assert np.array_equal(a, b)
