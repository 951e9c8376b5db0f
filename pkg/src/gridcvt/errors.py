"""Exception types raised across the package."""


class CvtError(Exception):
    """Base class for all errors raised by gridcvt."""


class SegmentOutsideDomain(CvtError):
    """An integration segment extends beyond the density's domain."""


class NonPositiveMass(CvtError):
    """A segment's mass underflowed to <= 0, signalling a degenerate cell."""


class MaxIterationsExceeded(CvtError):
    """A solver hit its iteration cap before converging.

    Carries the last iterate and its residual so callers can inspect or
    resume the solve.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class SingularJacobian(CvtError):
    """The Newton system's Jacobian was numerically singular."""


class OrderingViolated(CvtError):
    """A solver iterate lost strict centroid ordering and damping could not restore it."""


class CapExceeded(CvtError):
    """A requested enumeration exceeds the configured size cap."""


class IndexOutOfRange(CvtError):
    """A 1-based centroid/cell index is outside [1, N]."""


class OutOfDomain(CvtError):
    """A query point lies outside the tessellated region."""


class DomainMismatch(CvtError):
    """A density and a tessellation disagree about their domains."""


class EmptyCluster(CvtError):
    """A discrete Lloyd cluster received no grid nodes.

    Carries the offending cluster index.
    """

    def __init__(self, message, cluster=None):
        super().__init__(message)
        self.cluster = cluster


class ConfigError(CvtError):
    """A scenario configuration file is missing, malformed, or inconsistent."""
