"""1D densities over bounded intervals and their integral primitives.

Every centroid and energy formula in the package reduces to three
integrals over a subinterval: mass, first moment, and second moment
about a point. Uniform and Gaussian kinds use closed forms (Gaussian via
the error function); the exp-quadratic kind goes through adaptive
Simpson quadrature; tabulated densities integrate their piecewise-linear
interpolant exactly.

All built-in analytic kinds are log-concave, which is the regime where
the 1D centroidal tessellation is unique. Tabulated densities carry no
such guarantee; see the package docs.

Densities are immutable after construction and every operation is a pure
function, so values are safe to share across threads.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import erf, ndtr, ndtri

from .errors import ConfigError, NonPositiveMass, SegmentOutsideDomain
from .quadrature import adaptive_simpson

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Interval:
    """A bounded interval [lo, hi] with lo strictly below hi."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ValueError(f"interval requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


class Density1D:
    """Base class for 1D densities. Subclasses fill in the raw-unit hooks.

    "Raw" units are the density's natural, unnormalized scale (e.g. 1 for
    the uniform kind). When ``normalized`` is set, all public values are
    rescaled so the full-domain mass is 1.
    """

    kind: str = "abstract"

    def __init__(self, domain: Interval, normalized: bool = False):
        self._domain = domain
        self._normalized = bool(normalized)

    @property
    def domain(self) -> Interval:
        return self._domain

    @property
    def normalized(self) -> bool:
        return self._normalized

    # -- subclass hooks, all in raw units ---------------------------------

    def _pdf_raw(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _mass_raw(self, a: float, b: float) -> float:
        raise NotImplementedError

    def _first_moment_raw(self, a: float, b: float) -> float:
        raise NotImplementedError

    def _second_moment_raw(self, a: float, b: float, z: float) -> float:
        raise NotImplementedError

    def _cum_mass_raw(self, x: np.ndarray) -> np.ndarray:
        """Vectorized cumulative mass from domain.lo to each x."""
        raise NotImplementedError

    def _cum_first_moment_raw(self, x: np.ndarray) -> np.ndarray:
        """Vectorized cumulative first moment from domain.lo to each x."""
        raise NotImplementedError

    def _ppf_raw(self, q: np.ndarray) -> np.ndarray:
        """Inverse of cum_mass/total_mass; q in [0, 1] maps into the domain."""
        raise NotImplementedError

    def cache_key(self) -> tuple:
        raise NotImplementedError

    # -- public surface ---------------------------------------------------

    @cached_property
    def _raw_total(self) -> float:
        return self._mass_raw(self._domain.lo, self._domain.hi)

    @cached_property
    def _scale(self) -> float:
        if not self._normalized:
            return 1.0
        total = self._raw_total
        if not total > 0.0:
            raise NonPositiveMass(f"{self.kind} density has non-positive total mass {total}")
        return 1.0 / total

    @property
    def total_mass(self) -> float:
        """Mass over the full domain (1.0 when normalized)."""
        return self._scale * self._raw_total

    def pdf(self, x) -> np.ndarray:
        return self._scale * self._pdf_raw(np.asarray(x, dtype=np.float64))

    def _check_segment(self, seg: Interval) -> None:
        if seg.lo < self._domain.lo or seg.hi > self._domain.hi:
            raise SegmentOutsideDomain(
                f"segment [{seg.lo}, {seg.hi}] exceeds domain [{self._domain.lo}, {self._domain.hi}]"
            )

    def mass(self, seg: Interval) -> float:
        """Integral of the density over ``seg``.

        Raises NonPositiveMass when the value underflows to <= 0, which
        signals a degenerate cell rather than a genuine zero.
        """
        self._check_segment(seg)
        val = self._scale * self._mass_raw(seg.lo, seg.hi)
        if not val > 0.0:
            raise NonPositiveMass(
                f"mass over [{seg.lo}, {seg.hi}] is {val}; cell is degenerate"
            )
        return val

    def first_moment(self, seg: Interval) -> float:
        """Integral of x * rho(x) over ``seg``."""
        self._check_segment(seg)
        return self._scale * self._first_moment_raw(seg.lo, seg.hi)

    def centroid(self, seg: Interval) -> float:
        """Mass centroid of ``seg``: first moment divided by mass.

        The result is clamped to the open interior of ``seg``; the exact
        value lies there mathematically, and the clamp only absorbs
        last-bit rounding on extremely thin cells.
        """
        m = self.mass(seg)
        c = self.first_moment(seg) / m
        lo_in = np.nextafter(seg.lo, seg.hi)
        hi_in = np.nextafter(seg.hi, seg.lo)
        return float(min(max(c, lo_in), hi_in))

    def second_moment_about(self, seg: Interval, z: float) -> float:
        """Integral of rho(x) * (x - z)^2 over ``seg``: the per-cell energy."""
        self._check_segment(seg)
        return self._scale * self._second_moment_raw(seg.lo, seg.hi, float(z))

    def cell_stats(self, breakpoints: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell masses and first moments for consecutive breakpoints.

        Vectorized over all cells via cumulative integrals; one call per
        Lloyd sweep instead of two quadratures per cell. Raises
        NonPositiveMass when any cell's mass is degenerate.
        """
        bp = np.asarray(breakpoints, dtype=np.float64)
        cum_m = self._cum_mass_raw(bp)
        cum_f = self._cum_first_moment_raw(bp)
        masses = self._scale * np.diff(cum_m)
        moments = self._scale * np.diff(cum_f)
        if not np.all(masses > 0.0):
            j = int(np.argmin(masses))
            raise NonPositiveMass(
                f"cell {j} over [{bp[j]}, {bp[j + 1]}] has mass {masses[j]}"
            )
        return masses, moments

    def interval_profile(self, lo, hi) -> tuple[np.ndarray, np.ndarray]:
        """Masses and first moments over [lo_k, hi_k] pairs, elementwise.

        Unlike cell_stats this tolerates zero-mass intervals; deep-tail
        slivers legitimately underflow and the caller decides what that
        means.
        """
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        dm = self._scale * (self._cum_mass_raw(hi) - self._cum_mass_raw(lo))
        df = self._scale * (self._cum_first_moment_raw(hi) - self._cum_first_moment_raw(lo))
        return dm, df

    def ppf(self, q) -> np.ndarray:
        """Quantiles of the normalized density; q in [0, 1] maps into the domain."""
        qa = np.asarray(q, dtype=np.float64)
        if np.any(qa < 0.0) or np.any(qa > 1.0):
            raise ValueError("quantiles must lie in [0, 1]")
        x = self._ppf_raw(qa)
        return np.clip(x, self._domain.lo, self._domain.hi)

    def __repr__(self):
        flag = ", normalized" if self._normalized else ""
        return f"{type(self).__name__}([{self._domain.lo}, {self._domain.hi}]{flag})"


class UniformDensity(Density1D):
    """Constant density, rho(x) = 1 in raw units."""

    kind = "uniform"

    def _pdf_raw(self, x):
        return np.ones_like(x)

    def _mass_raw(self, a, b):
        return b - a

    def _first_moment_raw(self, a, b):
        return 0.5 * (b * b - a * a)

    def _second_moment_raw(self, a, b, z):
        return ((b - z) ** 3 - (a - z) ** 3) / 3.0

    def _cum_mass_raw(self, x):
        return x - self._domain.lo

    def _cum_first_moment_raw(self, x):
        return 0.5 * (x * x - self._domain.lo**2)

    def _ppf_raw(self, q):
        return self._domain.lo + q * self._domain.width

    def cache_key(self):
        return ("uniform", self._domain.lo, self._domain.hi, self._normalized)


class GaussianDensity(Density1D):
    """Gaussian with given mean and variance, truncated to the domain.

    Raw units are the full-line normal pdf, so the raw mass over the
    domain is the probability the untruncated variable lands inside it.
    With ``normalized`` set, that mass is rescaled to 1.
    """

    kind = "gaussian"

    def __init__(self, mean: float, variance: float, domain: Interval, normalized: bool = False):
        if not variance > 0.0:
            raise ValueError(f"variance must be positive, got {variance}")
        super().__init__(domain, normalized)
        self.mean = float(mean)
        self.variance = float(variance)
        self.sigma = math.sqrt(self.variance)

    def _std(self, x):
        return (x - self.mean) / self.sigma

    @staticmethod
    def _phi(t):
        return np.exp(-0.5 * t * t) / _SQRT2PI

    def _pdf_raw(self, x):
        return self._phi(self._std(x)) / self.sigma

    def _mass_raw(self, a, b):
        return float(ndtr(self._std(b)) - ndtr(self._std(a)))

    def _first_moment_raw(self, a, b):
        ta, tb = self._std(a), self._std(b)
        return float(self.mean * (ndtr(tb) - ndtr(ta)) - self.sigma * (self._phi(tb) - self._phi(ta)))

    def _second_moment_raw(self, a, b, z):
        ta, tb = self._std(a), self._std(b)
        dmass = ndtr(tb) - ndtr(ta)
        central_first = -self.sigma * (self._phi(tb) - self._phi(ta))
        central_second = self.variance * (dmass - (tb * self._phi(tb) - ta * self._phi(ta)))
        shift = self.mean - z
        return float(central_second + 2.0 * shift * central_first + shift * shift * dmass)

    def _cum_mass_raw(self, x):
        return ndtr(self._std(x)) - ndtr(self._std(self._domain.lo))

    def _cum_first_moment_raw(self, x):
        t0 = self._std(self._domain.lo)
        t = self._std(x)
        return self.mean * (ndtr(t) - ndtr(t0)) - self.sigma * (self._phi(t) - self._phi(t0))

    def _ppf_raw(self, q):
        f_lo = ndtr(self._std(self._domain.lo))
        f_hi = ndtr(self._std(self._domain.hi))
        return self.mean + self.sigma * ndtri(f_lo + q * (f_hi - f_lo))

    def cache_key(self):
        return (
            "gaussian",
            self.mean,
            self.variance,
            self._domain.lo,
            self._domain.hi,
            self._normalized,
        )


class ExpQuadraticDensity(Density1D):
    """rho(x) = exp(-a * x^2) with a > 0, kept unnormalized by default.

    The scalar mass/moment operations go through adaptive Simpson
    quadrature; the vectorized cumulative and quantile paths use the
    error-function closed forms, and the test suite pins the two routes
    against each other.
    """

    kind = "expquad"

    def __init__(self, scale: float, domain: Interval, normalized: bool = False):
        if not scale > 0.0:
            raise ValueError(f"scale must be positive, got {scale}")
        super().__init__(domain, normalized)
        self.scale_a = float(scale)
        # equivalent Gaussian sigma for the quantile closed form
        self._sigma_eq = 1.0 / math.sqrt(2.0 * self.scale_a)

    def _pdf_raw(self, x):
        return np.exp(-self.scale_a * x * x)

    def _f(self, x):
        return math.exp(-self.scale_a * x * x)

    def _mass_raw(self, a, b):
        return adaptive_simpson(self._f, a, b)

    def _first_moment_raw(self, a, b):
        return adaptive_simpson(lambda x: x * self._f(x), a, b)

    def _second_moment_raw(self, a, b, z):
        return adaptive_simpson(lambda x: (x - z) ** 2 * self._f(x), a, b)

    def _cum_mass_raw(self, x):
        r = math.sqrt(self.scale_a)
        front = 0.5 * math.sqrt(math.pi / self.scale_a)
        return front * (erf(r * x) - erf(r * self._domain.lo))

    def _cum_first_moment_raw(self, x):
        a = self.scale_a
        return (np.exp(-a * self._domain.lo**2) - np.exp(-a * x * x)) / (2.0 * a)

    def _ppf_raw(self, q):
        s = self._sigma_eq
        f_lo = ndtr(self._domain.lo / s)
        f_hi = ndtr(self._domain.hi / s)
        return s * ndtri(f_lo + q * (f_hi - f_lo))

    def cache_key(self):
        return ("expquad", self.scale_a, self._domain.lo, self._domain.hi, self._normalized)


class TabulatedDensity(Density1D):
    """Positive sampled density, integrated exactly as a piecewise-linear interpolant.

    No uniqueness guarantee for the resulting tessellations: tabulated
    data need not be log-concave.
    """

    kind = "table"

    def __init__(self, xs, rhos, normalized: bool = False):
        xs = np.asarray(xs, dtype=np.float64)
        rhos = np.asarray(rhos, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != rhos.shape or xs.size < 2:
            raise ValueError("tabulated density needs matching 1D arrays of length >= 2")
        if not np.all(np.diff(xs) > 0.0):
            raise ValueError("tabulated x grid must be strictly increasing")
        if not np.all(rhos > 0.0):
            raise ValueError("tabulated density values must be strictly positive")
        super().__init__(Interval(float(xs[0]), float(xs[-1])), normalized)
        self.xs = xs
        self.rhos = rhos
        self._slopes = np.diff(rhos) / np.diff(xs)
        # knot-level cumulative mass and first moment of the interpolant
        h = np.diff(xs)
        seg_mass = 0.5 * (rhos[:-1] + rhos[1:]) * h
        seg_fm = self._segment_first_moments(h)
        self._knot_mass = np.concatenate([[0.0], np.cumsum(seg_mass)])
        self._knot_fm = np.concatenate([[0.0], np.cumsum(seg_fm)])

    def _segment_first_moments(self, h):
        x0 = self.xs[:-1]
        r0 = self.rhos[:-1]
        m = self._slopes
        # integral of (x0 + t)(r0 + m t) dt over t in [0, h]
        return x0 * r0 * h + (r0 + x0 * m) * h * h / 2.0 + m * h**3 / 3.0

    def _segment_index(self, x):
        j = np.searchsorted(self.xs, x, side="right") - 1
        return np.clip(j, 0, self.xs.size - 2)

    def _pdf_raw(self, x):
        return np.interp(x, self.xs, self.rhos)

    def _cum_mass_raw(self, x):
        x = np.asarray(x, dtype=np.float64)
        j = self._segment_index(x)
        t = x - self.xs[j]
        return self._knot_mass[j] + self.rhos[j] * t + 0.5 * self._slopes[j] * t * t

    def _cum_first_moment_raw(self, x):
        x = np.asarray(x, dtype=np.float64)
        j = self._segment_index(x)
        t = x - self.xs[j]
        x0, r0, m = self.xs[j], self.rhos[j], self._slopes[j]
        return self._knot_fm[j] + x0 * r0 * t + (r0 + x0 * m) * t * t / 2.0 + m * t**3 / 3.0

    def _mass_raw(self, a, b):
        return float(self._cum_mass_raw(b) - self._cum_mass_raw(a))

    def _first_moment_raw(self, a, b):
        return float(self._cum_first_moment_raw(b) - self._cum_first_moment_raw(a))

    def _second_moment_raw(self, a, b, z):
        # exact quartic antiderivative, segment by segment
        ja = int(self._segment_index(a))
        jb = int(self._segment_index(b))
        total = 0.0
        for j in range(ja, jb + 1):
            lo = max(a, float(self.xs[j]))
            hi = min(b, float(self.xs[j + 1])) if j < jb else b
            if hi <= lo:
                continue
            total += self._segment_second_moment(j, lo, hi, z)
        return total

    def _segment_second_moment(self, j, lo, hi, z):
        x0 = float(self.xs[j])
        r0 = float(self.rhos[j])
        m = float(self._slopes[j])
        c = x0 - z

        def anti(t):
            # integral of (c + t)^2 (r0 + m t) dt
            return (
                r0 * c * c * t
                + (2.0 * c * r0 + m * c * c) * t * t / 2.0
                + (r0 + 2.0 * c * m) * t**3 / 3.0
                + m * t**4 / 4.0
            )

        return anti(hi - x0) - anti(lo - x0)

    def _ppf_raw(self, q):
        target = q * self._raw_total
        j = np.searchsorted(self._knot_mass, target, side="right") - 1
        j = np.clip(j, 0, self.xs.size - 2)
        dt = target - self._knot_mass[j]
        r0 = self.rhos[j]
        m = self._slopes[j]
        # positive root of 0.5 m t^2 + r0 t = dt, in a form stable as m -> 0
        t = 2.0 * dt / (r0 + np.sqrt(r0 * r0 + 2.0 * m * dt))
        return self.xs[j] + t

    def cache_key(self):
        return ("table", self.xs.tobytes(), self.rhos.tobytes(), self._normalized)


@dataclass(frozen=True)
class SeparableDensity:
    """A product density: one independent marginal per dimension."""

    marginals: tuple[Density1D, ...]

    def __post_init__(self):
        if len(self.marginals) < 1:
            raise ValueError("separable density needs at least one marginal")
        object.__setattr__(self, "marginals", tuple(self.marginals))

    @property
    def dimension(self) -> int:
        return len(self.marginals)

    @property
    def domains(self) -> tuple[Interval, ...]:
        return tuple(d.domain for d in self.marginals)

    def total_mass(self) -> float:
        out = 1.0
        for d in self.marginals:
            out *= d.total_mass
        return out


_DENSITY_RE = re.compile(
    r"^\s*(uniform|gaussian\s*\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)|"
    r"expquad\s*\(\s*([^,()]+)\s*\)|table\s*\(\s*([^()]+?)\s*\))\s*$"
)


def parse_density(spec: str, interval: Interval, normalized: bool = False,
                  base_dir: Path | None = None) -> Density1D:
    """Build a density from its config-file spelling.

    Grammar: ``uniform``, ``gaussian(mean,var)``, ``expquad(a)``,
    ``table(path.csv)``. Tabulated files need a ``x,rho`` header and a
    strictly increasing x column covering ``interval``; the table is
    clipped to the interval.
    """
    m = _DENSITY_RE.match(spec)
    if m is None:
        raise ConfigError(f"unrecognized density spec: {spec!r}")
    head = m.group(1)
    try:
        if head == "uniform":
            return UniformDensity(interval, normalized)
        if head.startswith("gaussian"):
            return GaussianDensity(float(m.group(2)), float(m.group(3)), interval, normalized)
        if head.startswith("expquad"):
            return ExpQuadraticDensity(float(m.group(4)), interval, normalized)
    except ValueError as exc:
        raise ConfigError(f"bad density spec {spec!r}: {exc}") from exc
    path = Path(m.group(5))
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    xs, rhos = _load_table(path)
    return _clip_table(xs, rhos, interval, normalized)


def _load_table(path: Path) -> tuple[np.ndarray, np.ndarray]:
    if not path.exists():
        raise ConfigError(f"density table not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["x", "rho"]:
            raise ConfigError(f"density table {path} must start with header 'x,rho'")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    if len(rows) < 2:
        raise ConfigError(f"density table {path} needs at least two rows")
    arr = np.asarray(rows, dtype=np.float64)
    return arr[:, 0], arr[:, 1]


def _clip_table(xs, rhos, interval: Interval, normalized: bool) -> TabulatedDensity:
    if xs[0] > interval.lo or xs[-1] < interval.hi:
        raise ConfigError(
            f"density table spans [{xs[0]}, {xs[-1]}] but the scenario interval is "
            f"[{interval.lo}, {interval.hi}]"
        )
    keep = (xs > interval.lo) & (xs < interval.hi)
    new_xs = np.concatenate([[interval.lo], xs[keep], [interval.hi]])
    new_rhos = np.concatenate(
        [[np.interp(interval.lo, xs, rhos)], rhos[keep], [np.interp(interval.hi, xs, rhos)]]
    )
    return TabulatedDensity(new_xs, new_rhos, normalized)
