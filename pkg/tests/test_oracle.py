"""Grid-based verification oracle.

These tests exercise the discrete Lloyd machinery directly: node
weighting, single sweeps on known configurations, the displacement
criterion, and the independent solver with its rescue path.
"""

import numpy as np
import pytest

from gridcvt.cvt1d import SolverConfig, SolverMethod
from gridcvt.density import (
    GaussianDensity,
    Interval,
    SeparableDensity,
    UniformDensity,
)
from gridcvt.errors import EmptyCluster, MaxIterationsExceeded
from gridcvt.oracle import (
    GridDiscretization,
    grid_energy,
    lloyd_nd_solve,
    lloyd_nd_step,
    verify_fixed_point,
)
from gridcvt.product import build_product


def unit_square():
    u = UniformDensity(Interval(0.0, 1.0))
    return SeparableDensity((u, u))


def gauss_rectangle():
    return SeparableDensity(
        (
            GaussianDensity(12.0, 4.0, Interval(0.0, 20.0)),
            GaussianDensity(7.0, 1.0, Interval(0.0, 10.0)),
        )
    )


class TestGridDiscretization:
    def test_shape_and_spacing(self):
        g = GridDiscretization.from_density(unit_square(), 64)
        assert g.shape == (64, 64)
        assert g.n_dims == 2
        assert g.points.shape == (64 * 64, 2)
        assert np.allclose(g.spacing, 1.0 / 63.0)

    def test_axis_weights_recover_marginal_mass(self):
        d = gauss_rectangle()
        g = GridDiscretization.from_density(d, 256)
        for i, m in enumerate(d.marginals):
            h = g.spacing[i]
            # interior slabs are exact; only the two boundary nodes carry
            # a flat-density approximation, so the defect is O(h)
            assert abs(g.axis_weights[i].sum() - m.total_mass) < 2.0 * h

    def test_interior_slab_centroids_exact_for_uniform(self):
        g = GridDiscretization.from_density(unit_square(), 64)
        nodes = g.axes[0]
        assert np.allclose(g.axis_centroids[0][1:-1], nodes[1:-1], atol=1e-13)
        assert g.axis_centroids[0][0] == 0.0 and g.axis_centroids[0][-1] == 1.0

    def test_rejects_low_resolution(self):
        with pytest.raises(ValueError):
            GridDiscretization.from_density(unit_square(), 8)

    def test_rejects_oversized_lattice(self):
        d = SeparableDensity(
            tuple(UniformDensity(Interval(0.0, 1.0)) for _ in range(4))
        )
        with pytest.raises(ValueError):
            GridDiscretization.from_density(d, 100)


class TestSingleSweep:
    def test_lone_centroid_moves_to_domain_centroid(self):
        g = GridDiscretization.from_density(unit_square(), 64)
        moved = lloyd_nd_step(np.array([[0.3, 0.4]]), g)
        assert np.allclose(moved, [[0.5, 0.5]], atol=1e-12)

    def test_symmetric_pair_keeps_symmetry_and_edge_bias_bound(self):
        g = GridDiscretization.from_density(unit_square(), 64)
        z = np.array([[0.25, 0.5], [0.75, 0.5]])
        moved = lloyd_nd_step(z, g)
        # y is an interior mirror plane: stationary to round-off. x feels
        # the flat boundary-slab weighting, an O(h) pull toward the edges
        # that the resolution-doubling criterion relies on.
        assert np.max(np.abs(moved[:, 1] - 0.5)) < 1e-12
        assert moved[0, 0] + moved[1, 0] == pytest.approx(1.0, abs=1e-12)
        h = 1.0 / 63.0
        assert 0.0 < z[0, 0] - moved[0, 0] < 0.5 * h

    def test_duplicate_centroid_starves_a_cluster(self):
        g = GridDiscretization.from_density(unit_square(), 32)
        with pytest.raises(EmptyCluster) as ei:
            lloyd_nd_step(np.array([[0.5, 0.5], [0.5, 0.5]]), g)
        assert ei.value.cluster == 1


class TestFixedPointCriterion:
    def test_true_product_moves_at_most_one_spacing(self):
        d = unit_square()
        p = build_product(d, (2, 2), SolverConfig(tolerance=1e-12))
        disp = verify_fixed_point(p, d, 64)
        assert disp <= 1.0 / 63.0

    def test_gaussian_product_moves_at_most_two_spacings(self):
        d = gauss_rectangle()
        p = build_product(d, (3, 2), SolverConfig(tolerance=1e-11))
        disp = verify_fixed_point(p, d, 128)
        assert disp <= 2.0 * 20.0 / 127.0

    def test_displacement_halves_with_resolution(self):
        d = gauss_rectangle()
        p = build_product(d, (3, 2), SolverConfig(tolerance=1e-11))
        d64 = verify_fixed_point(p, d, 64)
        d128 = verify_fixed_point(p, d, 128)
        assert 1.4 <= d64 / d128 <= 2.6

    def test_perturbed_grid_fails_the_criterion(self):
        d = unit_square()
        p = build_product(d, (2, 2), SolverConfig(tolerance=1e-12))
        bad = p.materialize()
        bad[0, 0] += 0.1
        g64 = GridDiscretization.from_density(d, 64)
        moved = lloyd_nd_step(bad, g64)
        disp = float(np.max(np.abs(moved - bad)))
        assert disp > 0.01  # an order above the h-sized wobble of a true CVT


class TestGridEnergy:
    def test_uniform_square_within_spacing(self):
        d = unit_square()
        p = build_product(d, (2, 2), SolverConfig(tolerance=1e-12))
        g = GridDiscretization.from_density(d, 64)
        assert abs(grid_energy(p.materialize(), g) - 1.0 / 24.0) < 1.0 / 63.0

    def test_plain_sweeps_never_increase_energy(self):
        g = GridDiscretization.from_density(unit_square(), 48)
        rng = np.random.default_rng(9)
        z = rng.uniform(0.1, 0.9, size=(5, 2))
        prev = grid_energy(z, g)
        for _ in range(15):
            z = lloyd_nd_step(z, g, refine_cuts=False)
            cur = grid_energy(z, g)
            assert cur <= prev + 1e-14
            prev = cur


class TestIndependentSolver:
    def test_recovers_1d_uniform_cvt(self):
        d = SeparableDensity((UniformDensity(Interval(0.0, 1.0)),))
        g = GridDiscretization.from_density(d, 1024)
        z = lloyd_nd_solve(g, 3, seed=3, cfg=SolverConfig(tolerance=1e-9))
        got = np.sort(z[:, 0])
        want = np.array([1.0 / 6.0, 0.5, 5.0 / 6.0])
        assert np.max(np.abs(got - want)) < 2.0 / 1023.0

    def test_rescue_recovers_from_hopeless_init(self):
        g = GridDiscretization.from_density(unit_square(), 64)
        # second centroid so far out it captures nothing on sweep one
        init = np.array([[0.5, 0.5], [5.0, 5.0]])
        z = lloyd_nd_solve(g, 2, seed=0, cfg=SolverConfig(tolerance=1e-9), init=init)
        assert np.all(z >= 0.0) and np.all(z <= 1.0)
        moved = lloyd_nd_step(z, g, refine_cuts=False)
        assert np.max(np.abs(moved - z)) <= 1e-9

    def test_iteration_budget_exhaustion(self):
        g = GridDiscretization.from_density(unit_square(), 32)
        cfg = SolverConfig(tolerance=1e-15, max_iterations=1)
        with pytest.raises(MaxIterationsExceeded) as ei:
            lloyd_nd_solve(g, 4, seed=1, cfg=cfg)
        assert ei.value.last_iterate.shape == (4, 2)

    def test_rejects_bad_init_shape(self):
        g = GridDiscretization.from_density(unit_square(), 32)
        with pytest.raises(ValueError):
            lloyd_nd_solve(g, 2, seed=0, init=np.zeros((3, 2)))
        with pytest.raises(ValueError):
            lloyd_nd_solve(g, 0, seed=0)

    def test_seed_controls_the_draw(self):
        g = GridDiscretization.from_density(unit_square(), 48)
        cfg = SolverConfig(tolerance=1e-9)
        a = lloyd_nd_solve(g, 4, seed=5, cfg=cfg)
        b = lloyd_nd_solve(g, 4, seed=5, cfg=cfg)
        assert np.array_equal(a, b)
