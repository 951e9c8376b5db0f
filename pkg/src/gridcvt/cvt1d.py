"""1D centroidal tessellation solvers.

Two routes to the same fixed point z_j = centroid(cell_j(z)), where the
cells are the midpoint-breakpoint intervals induced by the sorted
centroids: plain Lloyd iteration, and a damped Newton solve of the
fixed-point system with a finite-difference Jacobian. For log-concave
densities the solution is unique, so the two must agree; the default
method prefers Newton at small codebook sizes and falls back to Lloyd
when Newton misbehaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .density import Density1D, Interval
from .errors import (
    MaxIterationsExceeded,
    OrderingViolated,
    SingularJacobian,
)

LLOYD_MAX_ITERATIONS = 10_000
NEWTON_MAX_ITERATIONS = 100
NEWTON_SIZE_LIMIT = 64  # above this, the fallback method goes straight to Lloyd
_FD_STEP_REL = 1e-7  # Jacobian probe step, relative to domain width
_MIN_DAMPING = 2.0**-26


class SolverMethod(str, Enum):
    LLOYD = "lloyd"
    NEWTON = "newton"
    NEWTON_WITH_LLOYD_FALLBACK = "newton_with_lloyd_fallback"


@dataclass(frozen=True)
class SolverConfig:
    """Tolerance is the max centroid displacement per sweep, in domain units.

    ``max_iterations`` of None means the per-method default (10_000 for
    Lloyd, 100 for Newton).
    """

    tolerance: float = 1e-10
    max_iterations: int | None = None
    method: SolverMethod = SolverMethod.NEWTON_WITH_LLOYD_FALLBACK

    def __post_init__(self):
        if not self.tolerance > 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")

    def iterations_for(self, method: SolverMethod) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return NEWTON_MAX_ITERATIONS if method is SolverMethod.NEWTON else LLOYD_MAX_ITERATIONS


@dataclass
class SolveStats:
    method: str
    iterations: int
    displacement: float
    residual: float
    converged: bool = True
    fell_back: bool = False


@dataclass(frozen=True, eq=False)
class Cvt1D:
    """A 1D tessellation: sorted centroids plus their midpoint breakpoints."""

    domain: Interval
    centroids: np.ndarray
    breakpoints: np.ndarray
    stats: SolveStats | None = None

    def __post_init__(self):
        z = np.asarray(self.centroids, dtype=np.float64)
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        if z.ndim != 1 or z.size < 1:
            raise ValueError("centroids must be a non-empty 1D vector")
        if bp.shape != (z.size + 1,):
            raise ValueError("breakpoints must have length len(centroids) + 1")
        if not np.all(np.diff(z) > 0.0):
            raise ValueError("centroids must be strictly increasing")
        if z[0] <= self.domain.lo or z[-1] >= self.domain.hi:
            raise ValueError("centroids must lie strictly inside the domain")
        if bp[0] != self.domain.lo or bp[-1] != self.domain.hi:
            raise ValueError("breakpoints must start and end at the domain endpoints")
        mid = 0.5 * (z[:-1] + z[1:])
        if not np.array_equal(bp[1:-1], mid):
            raise ValueError("interior breakpoints must be exact centroid midpoints")
        z = z.copy()
        bp = bp.copy()
        z.flags.writeable = False
        bp.flags.writeable = False
        object.__setattr__(self, "centroids", z)
        object.__setattr__(self, "breakpoints", bp)

    @property
    def n(self) -> int:
        return self.centroids.size

    def cell(self, j: int) -> Interval:
        return Interval(float(self.breakpoints[j]), float(self.breakpoints[j + 1]))


def breakpoints_from_centroids(domain: Interval, centroids: np.ndarray) -> np.ndarray:
    z = np.asarray(centroids, dtype=np.float64)
    return np.concatenate([[domain.lo], 0.5 * (z[:-1] + z[1:]), [domain.hi]])


def from_centroids(d: Density1D, centroids, stats: SolveStats | None = None) -> Cvt1D:
    """Wrap sorted centroids into a validated tessellation over d's domain."""
    z = np.asarray(centroids, dtype=np.float64)
    return Cvt1D(d.domain, z, breakpoints_from_centroids(d.domain, z), stats)


def quantile_init(d: Density1D, n: int) -> np.ndarray:
    """Equal-mass starting centroids: the (2j-1)/(2n) quantiles.

    Every induced cell starts with mass about 1/n, so iteration 0 cannot
    hit a degenerate cell.
    """
    q = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    z = d.ppf(q)
    # guard against last-bit ties deep in a tail
    for j in range(1, n):
        if z[j] <= z[j - 1]:
            z[j] = np.nextafter(z[j - 1], d.domain.hi)
    return z


def lloyd_step(d: Density1D, centroids: np.ndarray) -> np.ndarray:
    """One sweep: midpoint breakpoints, then the mass centroid of each cell."""
    z = np.asarray(centroids, dtype=np.float64)
    bp = breakpoints_from_centroids(d.domain, z)
    masses, moments = d.cell_stats(bp)
    out = moments / masses
    # each centroid belongs to the open interior of its own cell
    lo = np.nextafter(bp[:-1], d.domain.hi)
    hi = np.nextafter(bp[1:], d.domain.lo)
    return np.clip(out, lo, hi)


def _solve_single(d: Density1D, method: str) -> Cvt1D:
    z0 = d.centroid(d.domain)
    stats = SolveStats(method=method, iterations=0, displacement=0.0, residual=0.0)
    return from_centroids(d, np.array([z0]), stats)


def solve_lloyd(d: Density1D, n: int, cfg: SolverConfig = SolverConfig()) -> Cvt1D:
    """Iterate lloyd_step from the equal-mass start until the sweep moves
    no centroid by more than cfg.tolerance.

    The displacement test alone can stop a slowly-contracting iteration
    far from the fixed point (error ~ displacement * r/(1-r) at
    contraction rate r), which would break cross-solver agreement. The
    loop therefore also estimates r from successive displacements and
    keeps sweeping until that error bound is itself below tolerance.
    """
    if n == 1:
        return _solve_single(d, "lloyd")
    max_iter = cfg.iterations_for(SolverMethod.LLOYD)
    tol = cfg.tolerance
    z = quantile_init(d, n)
    d_prev = None
    disp = math.inf
    for it in range(1, max_iter + 1):
        z_next = lloyd_step(d, z)
        disp = float(np.max(np.abs(z_next - z)))
        if d_prev is not None and d_prev > 0.0:
            rate = disp / d_prev
            bound = disp * rate / (1.0 - rate) if rate < 1.0 else math.inf
        else:
            bound = 0.0 if disp == 0.0 else math.inf
        z = z_next
        if disp <= tol and (bound <= tol or disp <= 0.05 * tol):
            residual = float(np.max(np.abs(lloyd_step(d, z) - z)))
            stats = SolveStats("lloyd", it, disp, residual)
            return from_centroids(d, z, stats)
        d_prev = disp
    raise MaxIterationsExceeded(
        f"Lloyd did not converge in {max_iter} sweeps (last displacement {disp:.3e})",
        last_iterate=z,
        residual=disp,
    )


def _fixed_point_residual(d: Density1D, z: np.ndarray) -> np.ndarray:
    return lloyd_step(d, z) - z


def _jacobian_fd(d: Density1D, z: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of F(z) = z - lloyd_step(z)."""
    n = z.size
    width = d.domain.width
    jac = np.eye(n)
    gaps = np.diff(np.concatenate([[d.domain.lo], z, [d.domain.hi]]))
    for j in range(n):
        # probe must not reorder the centroids
        h = min(_FD_STEP_REL * width, 0.25 * gaps[j], 0.25 * gaps[j + 1])
        zp = z.copy()
        zm = z.copy()
        zp[j] += h
        zm[j] -= h
        col = (lloyd_step(d, zp) - lloyd_step(d, zm)) / (2.0 * h)
        jac[:, j] -= col
    return jac


def _ordered_inside(z: np.ndarray, domain: Interval) -> bool:
    return (
        bool(np.all(np.diff(z) > 0.0))
        and z[0] > domain.lo
        and z[-1] < domain.hi
        and bool(np.all(np.isfinite(z)))
    )


def solve_newton(d: Density1D, n: int, cfg: SolverConfig = SolverConfig()) -> Cvt1D:
    """Damped Newton on the fixed-point system z = lloyd_step(z).

    The Jacobian comes from central finite differences; each step is
    halved until the residual norm decreases and the iterate stays
    strictly ordered inside the domain.
    """
    if n == 1:
        return _solve_single(d, "newton")
    max_iter = cfg.iterations_for(SolverMethod.NEWTON)
    tol = cfg.tolerance
    z = quantile_init(d, n)
    res = _fixed_point_residual(d, z)
    norm = float(np.max(np.abs(res)))
    disp = 0.0
    for it in range(0, max_iter + 1):
        if norm <= tol:
            stats = SolveStats("newton", it, disp, norm)
            return from_centroids(d, z, stats)
        if it == max_iter:
            break
        jac = _jacobian_fd(d, z)
        try:
            delta = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"Jacobian singular at iteration {it}") from exc
        alpha = 1.0
        accepted = False
        any_ordered = False
        while alpha >= _MIN_DAMPING:
            cand = z + alpha * delta
            if _ordered_inside(cand, d.domain):
                any_ordered = True
                cand_res = _fixed_point_residual(d, cand)
                cand_norm = float(np.max(np.abs(cand_res)))
                if cand_norm < norm or cand_norm <= tol:
                    disp = float(np.max(np.abs(alpha * delta)))
                    z, res, norm = cand, cand_res, cand_norm
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            if not any_ordered:
                raise OrderingViolated(
                    f"Newton step loses centroid ordering at iteration {it} "
                    f"even at damping {_MIN_DAMPING:.1e}"
                )
            raise MaxIterationsExceeded(
                f"Newton stalled at iteration {it} (residual {norm:.3e})",
                last_iterate=z,
                residual=norm,
            )
    raise MaxIterationsExceeded(
        f"Newton did not converge in {max_iter} iterations (residual {norm:.3e})",
        last_iterate=z,
        residual=norm,
    )


def solve(d: Density1D, n: int, cfg: SolverConfig = SolverConfig()) -> Cvt1D:
    """Solve per cfg.method; the fallback method uses Newton for small
    codebooks and Lloyd otherwise, and reverts to Lloyd when Newton fails."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if cfg.method is SolverMethod.LLOYD:
        return solve_lloyd(d, n, cfg)
    if cfg.method is SolverMethod.NEWTON:
        return solve_newton(d, n, cfg)
    if n > NEWTON_SIZE_LIMIT:
        return solve_lloyd(d, n, cfg)
    try:
        return solve_newton(d, n, cfg)
    except (SingularJacobian, OrderingViolated, MaxIterationsExceeded):
        result = solve_lloyd(d, n, cfg)
        if result.stats is not None:
            result.stats.fell_back = True
        return result


def energy_1d(d: Density1D, cvt: Cvt1D) -> float:
    """Quantization energy: sum over cells of the second moment about the
    cell's centroid."""
    total = 0.0
    for j in range(cvt.n):
        total += d.second_moment_about(cvt.cell(j), float(cvt.centroids[j]))
    return total
