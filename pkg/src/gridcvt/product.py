"""Product tessellations: n independent 1D solves assembled into an
n-dimensional CVT.

Under a separable density, the Cartesian product of per-dimension
tessellations is itself centroidal: each box cell's mass centroid
factors into the per-coordinate 1D centroids. The enumeration of the N =
prod(N_i) cells is fixed as last-dimension-fastest, and both cell
indices k and the per-dimension entries of the index matrix are 1-based,
matching the usual matrix spelling of the construction.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cvt1d import Cvt1D, SolverConfig, solve
from .density import Interval, SeparableDensity
from .errors import (
    CapExceeded,
    CvtError,
    IndexOutOfRange,
    MaxIterationsExceeded,
    OutOfDomain,
)

DEFAULT_CELL_CAP = 10_000_000


@dataclass(frozen=True)
class Box:
    """An axis-aligned product of intervals."""

    intervals: tuple[Interval, ...]

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        if len(self.intervals) < 1:
            raise ValueError("box needs at least one interval")

    @property
    def dimension(self) -> int:
        return len(self.intervals)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return all(iv.contains(float(c)) for iv, c in zip(self.intervals, x))

    @property
    def volume(self) -> float:
        v = 1.0
        for iv in self.intervals:
            v *= iv.width
        return v


class IndexMatrix:
    """Enumerates all combinations of per-dimension cell indices.

    Column k (1-based) holds one index per dimension, each in [1, N_i];
    the last dimension varies fastest, so dims (2, 3) enumerates
    (1,1),(1,2),(1,3),(2,1),(2,2),(2,3). Columns are computed on demand;
    the full n x N entries array materializes lazily on first access.
    """

    def __init__(self, dims):
        dims = tuple(int(d) for d in dims)
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise ValueError(f"dims must be positive integers, got {dims}")
        self.dims = dims
        n_total = 1
        for d in dims:
            n_total *= d
        self.n_cells = n_total
        self._entries = None

    @property
    def n_dims(self) -> int:
        return len(self.dims)

    def column(self, k: int) -> tuple[int, ...]:
        """1-based per-dimension indices for 1-based cell k."""
        if not 1 <= k <= self.n_cells:
            raise IndexOutOfRange(f"cell index {k} outside [1, {self.n_cells}]")
        c = k - 1
        out = [0] * self.n_dims
        for i in range(self.n_dims - 1, -1, -1):
            out[i] = c % self.dims[i] + 1
            c //= self.dims[i]
        return tuple(out)

    def flat_index(self, digits) -> int:
        """Inverse of column: 1-based cell k from 1-based per-dimension indices."""
        c = 0
        for d, idx in zip(self.dims, digits):
            if not 1 <= idx <= d:
                raise IndexOutOfRange(f"dimension index {idx} outside [1, {d}]")
            c = c * d + (idx - 1)
        return c + 1

    @property
    def entries(self) -> np.ndarray:
        if self._entries is None:
            self._entries = np.indices(self.dims).reshape(self.n_dims, -1) + 1
        return self._entries


def index_matrix(dims, cap: int = DEFAULT_CELL_CAP) -> IndexMatrix:
    """Full enumeration of the index combinations, last dimension fastest."""
    im = IndexMatrix(dims)
    if im.n_cells > cap:
        raise CapExceeded(f"{im.n_cells} cells exceeds the cap of {cap}")
    return im


@dataclass(frozen=True, eq=False)
class ProductCvt:
    """n per-dimension tessellations plus the cell enumeration."""

    factors: tuple[Cvt1D, ...]
    index: IndexMatrix

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) != self.index.n_dims:
            raise ValueError("one factor per dimension required")
        for f, d in zip(self.factors, self.index.dims):
            if f.n != d:
                raise ValueError(f"factor has {f.n} centroids but dims say {d}")

    @property
    def n_dims(self) -> int:
        return len(self.factors)

    @property
    def n_cells(self) -> int:
        return self.index.n_cells

    @property
    def dims(self) -> tuple[int, ...]:
        return self.index.dims

    def domain(self) -> Box:
        return Box(tuple(f.domain for f in self.factors))

    def centroid_of(self, k: int) -> np.ndarray:
        col = self.index.column(k)
        return np.array(
            [f.centroids[j - 1] for f, j in zip(self.factors, col)], dtype=np.float64
        )

    def cell_of(self, k: int) -> Box:
        col = self.index.column(k)
        return Box(tuple(f.cell(j - 1) for f, j in zip(self.factors, col)))

    def locate(self, x) -> int:
        """1-based cell index of the cell containing x.

        Per-dimension binary search on the breakpoints; a point exactly
        on an interior breakpoint goes to the lower-index cell.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_dims,):
            raise ValueError(f"point must have {self.n_dims} coordinates")
        digits = []
        for f, c in zip(self.factors, x):
            if not f.domain.contains(float(c)):
                raise OutOfDomain(
                    f"coordinate {c} outside [{f.domain.lo}, {f.domain.hi}]"
                )
            j = int(np.searchsorted(f.breakpoints, c, side="left")) - 1
            digits.append(max(j, 0) + 1)
        return self.index.flat_index(digits)

    def materialize(self) -> np.ndarray:
        """All N centroids as an (N, n) array, rows in enumeration order."""
        grids = np.meshgrid(*[f.centroids for f in self.factors], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def materialize_breakpoints(self) -> list[np.ndarray]:
        return [f.breakpoints for f in self.factors]


def _solve_tagged(density, n, cfg, dim_index):
    try:
        return solve(density, n, cfg)
    except MaxIterationsExceeded as exc:
        raise MaxIterationsExceeded(
            f"dimension {dim_index}: {exc}",
            last_iterate=exc.last_iterate,
            residual=exc.residual,
        ) from exc
    except CvtError as exc:
        raise type(exc)(f"dimension {dim_index}: {exc}") from exc


def build_product(
    density: SeparableDensity,
    dims,
    cfg: SolverConfig = SolverConfig(),
    cap: int = DEFAULT_CELL_CAP,
    threads: int = 1,
) -> ProductCvt:
    """Solve each marginal's 1D problem and assemble the product.

    Identical (marginal, N) tasks are solved once and shared. The solves
    are independent; with threads > 1 they run in a thread pool, and the
    assembly order is fixed by the dims sequence either way, so output
    does not depend on scheduling.
    """
    dims = tuple(int(d) for d in dims)
    if len(density.marginals) != len(dims):
        raise ValueError(
            f"{len(density.marginals)} marginals but {len(dims)} dims"
        )
    im = index_matrix(dims, cap)
    tasks: dict[tuple, tuple[int, int]] = {}
    for i, (marginal, n) in enumerate(zip(density.marginals, dims)):
        key = (marginal.cache_key(), n)
        tasks.setdefault(key, (i, n))
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                key: pool.submit(_solve_tagged, density.marginals[i], n, cfg, i)
                for key, (i, n) in tasks.items()
            }
            solved = {key: fut.result() for key, fut in futures.items()}
    else:
        solved = {
            key: _solve_tagged(density.marginals[i], n, cfg, i)
            for key, (i, n) in tasks.items()
        }
    factors = tuple(
        solved[(marginal.cache_key(), n)] for marginal, n in zip(density.marginals, dims)
    )
    return ProductCvt(factors, im)
