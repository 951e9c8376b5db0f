"""Brute-force verification on a dense grid, independent of the product
construction.

The tessellation solvers never see this code path: here the domain is a
tensor lattice of nodes, ownership is decided by exhaustive
nearest-centroid scan, and centroids are weighted node means. Running
one such Lloyd sweep over a claimed CVT measures how far the claim is
from a fixed point of the discretized problem. The same machinery,
iterated from random starts, exhibits alternative CVTs of the same
problem (they exist in more than one dimension).

Discretization choice, and why: each interior node owns the slab
reaching halfway to its neighbors and carries that slab's exact
marginal mass and centroid, while the two boundary nodes keep a plain
density-times-spacing weight whose slab pokes half a spacing outside
the domain. That overhang is the one deliberate error: it shrinks like
1/resolution deterministically, so doubling the resolution should halve
the displacement of a genuine CVT. Whole-slab 0/1 assignment would bury
that clean scaling under cut errors that oscillate with the lattice
phase, so wherever the label flips between adjacent nodes the exact
mass between the slab midline and the equidistance crossing is moved to
the correct side, and where two such cuts meet, the doubly-swept corner
rectangle is rebalanced across the quad's diagonals.

Toy scale on purpose: up to 3 dimensions and ten million nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cvt1d import SolverConfig, SolverMethod
from .density import SeparableDensity
from .errors import EmptyCluster, MaxIterationsExceeded
from .product import ProductCvt

MIN_GRID_RES = 16
MAX_GRID_NODES = 10_000_000
MAX_RESCUES = 10


@dataclass(frozen=True, eq=False)
class GridDiscretization:
    """Endpoint-inclusive tensor lattice weighted by per-axis slab masses.

    ``points`` are the geometric nodes and decide ownership;
    ``slab_points`` are the per-axis slab centroids and carry the
    moments. ``weights`` is the outer product of ``axis_weights``, so
    sums over nodes approximate integrals over the domain.
    """

    points: np.ndarray  # (M, n) flattened node lattice, C order
    slab_points: np.ndarray  # (M, n) per-axis slab centroids, same layout
    weights: np.ndarray  # (M,)
    axes: tuple  # per-dimension node vectors
    axis_weights: tuple  # per-dimension slab weight vectors
    axis_centroids: tuple  # per-dimension slab centroid vectors
    spacing: np.ndarray  # (n,) node spacing per dimension
    density: SeparableDensity

    def __post_init__(self):
        if np.any(self.weights < 0.0):
            raise ValueError("grid weights must be non-negative")

    @property
    def n_dims(self) -> int:
        return self.points.shape[1]

    @property
    def shape(self) -> tuple:
        return tuple(len(ax) for ax in self.axes)

    @classmethod
    def from_density(cls, d: SeparableDensity, points_per_dim: int) -> "GridDiscretization":
        if points_per_dim < MIN_GRID_RES:
            raise ValueError(f"points_per_dim must be >= {MIN_GRID_RES}")
        n = d.dimension
        if points_per_dim**n > MAX_GRID_NODES:
            raise ValueError(
                f"{points_per_dim}^{n} nodes exceeds the {MAX_GRID_NODES} cap"
            )
        axes = []
        axis_w = []
        axis_c = []
        spacing = []
        for marginal in d.marginals:
            dom = marginal.domain
            nodes = np.linspace(dom.lo, dom.hi, points_per_dim)
            h = dom.width / (points_per_dim - 1)
            edges = np.empty(points_per_dim + 1)
            edges[0] = dom.lo
            edges[-1] = dom.hi
            edges[1:-1] = nodes[:-1] + 0.5 * h
            w, f = marginal.interval_profile(edges[:-1], edges[1:])
            c = np.where(w > 0.0, f / np.where(w > 0.0, w, 1.0), nodes)
            # boundary slabs: flat node weight, half of it outside the domain
            w[0] = marginal.pdf(dom.lo) * h
            w[-1] = marginal.pdf(dom.hi) * h
            c[0] = dom.lo
            c[-1] = dom.hi
            axes.append(nodes)
            axis_w.append(w)
            axis_c.append(c)
            spacing.append(h)
        points = np.stack(
            [g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1
        )
        slab_points = np.stack(
            [g.ravel() for g in np.meshgrid(*axis_c, indexing="ij")], axis=1
        )
        weight = axis_w[0]
        for vec in axis_w[1:]:
            weight = np.multiply.outer(weight, vec)
        return cls(
            points,
            slab_points,
            weight.ravel(),
            tuple(axes),
            tuple(axis_w),
            tuple(axis_c),
            np.asarray(spacing),
            d,
        )

    def transverse_weight(self, skip, where) -> np.ndarray:
        """Product of slab weights over all axes except those in skip,
        gathered at the given per-axis index arrays."""
        out = 1.0
        for l in range(self.n_dims):
            if l not in skip:
                out = out * self.axis_weights[l][where[l]]
        return np.asarray(out, dtype=np.float64)


def _axis_crossing(grid, centroids, cents_sq, axis, lab_a, lab_b, where):
    """Equidistance crossing between two labels on the axis line through
    the given lattice indices, clipped to the node gap. Also returns the
    slab midline and the exact mass and first moment of the strip
    between them."""
    delta = centroids[lab_b] - centroids[lab_a]
    rhs = cents_sq[lab_b] - cents_sq[lab_a]
    for l in range(grid.n_dims):
        if l != axis:
            rhs = rhs - 2.0 * grid.axes[l][where[l]] * delta[:, l]
    deni = 2.0 * delta[:, axis]
    ok = np.abs(deni) > 1e-300
    x_lo = grid.axes[axis][where[axis]]
    h = float(grid.spacing[axis])
    mid = x_lo + 0.5 * h
    t_star = np.where(ok, rhs / np.where(ok, deni, 1.0), mid)
    t_star = np.clip(t_star, x_lo, x_lo + h)
    pm, pf = grid.density.marginals[axis].interval_profile(
        np.minimum(mid, t_star), np.maximum(mid, t_star)
    )
    return t_star, mid, pm, pf


def _cut_corrections(labels, centroids, grid, mass, moment):
    """Move the exact mass between each slab midline and the true
    nearest-centroid crossing to the side that owns it.

    Whole-slab assignment cuts midway between the two nodes; the true
    boundary generally sits elsewhere in the gap. The difference is
    first order in the spacing and oscillates with the lattice phase, so
    without this transfer it drowns the deterministic part of the
    one-step displacement.
    """
    n = grid.n_dims
    shape = grid.shape
    lab = labels.reshape(shape)
    cents_sq = np.einsum("ij,ij->i", centroids, centroids)
    for axis in range(n):
        sl_lo = [slice(None)] * n
        sl_hi = [slice(None)] * n
        sl_lo[axis] = slice(None, -1)
        sl_hi[axis] = slice(1, None)
        la = lab[tuple(sl_lo)]
        lb = lab[tuple(sl_hi)]
        where = np.nonzero(la != lb)
        if where[0].size == 0:
            continue
        a = la[where]
        b = lb[where]
        t_star, mid, pm, pf = _axis_crossing(grid, centroids, cents_sq, axis, a, b, where)
        omega = grid.transverse_weight((axis,), where)
        dm = pm * omega
        dmom_axis = pf * omega
        # the crossing above the midline belongs to a, below it to b
        donor_lab = np.where(t_star > mid, b, a)
        receiver_lab = np.where(t_star > mid, a, b)
        np.subtract.at(mass, donor_lab, dm)
        np.add.at(mass, receiver_lab, dm)
        for l in range(n):
            if l == axis:
                np.subtract.at(moment[:, l], donor_lab, dmom_axis)
                np.add.at(moment[:, l], receiver_lab, dmom_axis)
            else:
                comp = dm * grid.axis_centroids[l][where[l]]
                np.subtract.at(moment[:, l], donor_lab, comp)
                np.add.at(moment[:, l], receiver_lab, comp)


def _corner_corrections(labels, centroids, grid, mass, moment):
    """Second-order fix-up where two axis cuts meet.

    The two strip transfers each sweep the full transverse slab, so the
    corner rectangle between the slab midlines and the true crossings is
    moved twice. Transferring its exact mass between the quad's
    diagonals (signed by the two offsets) restores the balance.
    """
    n = grid.n_dims
    if n < 2:
        return
    shape = grid.shape
    lab = labels.reshape(shape)
    cents_sq = np.einsum("ij,ij->i", centroids, centroids)
    for ai in range(n):
        for aj in range(ai + 1, n):
            sl = {}
            for tag, (di, dj) in (("a", (0, 0)), ("b", (1, 0)), ("c", (0, 1)), ("d", (1, 1))):
                s = [slice(None)] * n
                s[ai] = slice(di, None) if di else slice(None, -1)
                s[aj] = slice(dj, None) if dj else slice(None, -1)
                sl[tag] = lab[tuple(s)]
            qa, qb, qc, qd = sl["a"], sl["b"], sl["c"], sl["d"]
            corner = (qa != qb) & (qc != qd) & (qa != qc) & (qb != qd)
            where = np.nonzero(corner)
            if where[0].size == 0:
                continue
            a = qa[where]
            b = qb[where]
            c = qc[where]
            d = qd[where]
            ti, mi, pmi, pfi = _axis_crossing(grid, centroids, cents_sq, ai, a, b, where)
            tj, mj, pmj, pfj = _axis_crossing(grid, centroids, cents_sq, aj, a, c, where)
            sign = np.sign(ti - mi) * np.sign(tj - mj)
            omega = grid.transverse_weight((ai, aj), where)
            dm = sign * pmi * pmj * omega
            for s, labs in ((1.0, (a, d)), (-1.0, (b, c))):
                for lv in labs:
                    np.add.at(mass, lv, s * dm)
                    for l in range(n):
                        if l == ai:
                            comp = sign * pfi * pmj * omega
                        elif l == aj:
                            comp = sign * pmi * pfj * omega
                        else:
                            comp = dm * grid.axis_centroids[l][where[l]]
                        np.add.at(moment[:, l], lv, s * comp)


def lloyd_nd_step(
    centroids: np.ndarray, grid: GridDiscretization, refine_cuts: bool = True
) -> np.ndarray:
    """One discrete Lloyd sweep: assign every node to its nearest centroid
    (ties to the lowest index) and return the weighted mean per cluster.

    With refine_cuts the cut and corner transfers sharpen the cluster
    boundaries to the exact crossings, which verify_fixed_point needs
    for its clean convergence order. Without it the sweep is the plain
    whole-slab Lloyd map, whose energy-descent property guarantees the
    fixed-point iteration in lloyd_nd_solve terminates instead of
    rattling between label patterns.
    """
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    n_clusters = centroids.shape[0]
    labels, _ = kernels.nearest_assign(grid.points, centroids)
    mass, moment = kernels.accumulate_clusters(
        grid.slab_points, grid.weights, labels, n_clusters
    )
    if refine_cuts:
        _cut_corrections(labels, centroids, grid, mass, moment)
        _corner_corrections(labels, centroids, grid, mass, moment)
    if np.any(mass <= 0.0):
        j = int(np.argmin(mass))
        raise EmptyCluster(f"cluster {j} captured no grid mass", cluster=j)
    return moment / mass[:, None]


def grid_energy(centroids: np.ndarray, grid: GridDiscretization) -> float:
    """Discretized quantization energy of an arbitrary centroid set."""
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    _, dsq = kernels.nearest_assign(grid.points, centroids)
    return float(np.dot(grid.weights, dsq))


def verify_fixed_point(p: ProductCvt, d: SeparableDensity, grid_res: int) -> float:
    """Max displacement of the product centroids under one discrete Lloyd
    sweep at the given resolution.

    A genuine CVT moves only by the discretization error, which shrinks
    like 1/grid_res; anything else stays put as resolution grows.
    """
    grid = GridDiscretization.from_density(d, grid_res)
    centroids = p.materialize()
    moved = lloyd_nd_step(centroids, grid)
    return float(np.max(np.abs(moved - centroids)))


def _farthest_node(grid: GridDiscretization, centroids: np.ndarray) -> np.ndarray:
    _, dsq = kernels.nearest_assign(grid.points, centroids)
    return grid.points[int(np.argmax(dsq))].copy()


def lloyd_nd_solve(
    grid: GridDiscretization,
    n_centroids: int,
    seed: int,
    cfg: SolverConfig = SolverConfig(),
    init: np.ndarray | None = None,
) -> np.ndarray:
    """Discrete Lloyd iteration from a random density-weighted start.

    Initial centroids are distinct grid nodes drawn with probability
    proportional to weight, unless an explicit init is given. A cluster
    that loses all its nodes is reseeded at the node farthest from every
    current centroid, at most MAX_RESCUES times. Converges to SOME fixed
    point of the discrete problem, not necessarily the product one; that
    is the point.

    Sweeps run without the cut refinement: the plain whole-slab map
    never increases the discrete energy, so label patterns stabilize and
    the iteration reaches an exact fixed point in finitely many sweeps.
    """
    if n_centroids < 1:
        raise ValueError("n_centroids must be >= 1")
    if init is not None:
        centroids = np.array(init, dtype=np.float64)
        if centroids.shape != (n_centroids, grid.n_dims):
            raise ValueError("init must have shape (n_centroids, n_dims)")
    else:
        rng = np.random.default_rng(seed)
        prob = grid.weights / grid.weights.sum()
        picks = rng.choice(grid.points.shape[0], size=n_centroids, replace=False, p=prob)
        centroids = grid.points[picks].astype(np.float64)
    max_iter = cfg.iterations_for(SolverMethod.LLOYD)
    rescues = 0
    disp = np.inf
    for _ in range(max_iter):
        try:
            moved = lloyd_nd_step(centroids, grid, refine_cuts=False)
        except EmptyCluster as exc:
            if rescues >= MAX_RESCUES:
                raise
            rescues += 1
            centroids = centroids.copy()
            centroids[exc.cluster] = _farthest_node(grid, centroids)
            continue
        disp = float(np.max(np.abs(moved - centroids)))
        centroids = moved
        if disp <= cfg.tolerance:
            return centroids
    raise MaxIterationsExceeded(
        f"discrete Lloyd did not converge in {max_iter} sweeps (last displacement {disp:.3e})",
        last_iterate=centroids,
        residual=disp,
    )
