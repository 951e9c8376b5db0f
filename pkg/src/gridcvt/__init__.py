"""Product tessellations of boxes under separable densities.

Solve the 1D centroidal problem per dimension, assemble the Cartesian
product, and get a genuine n-dimensional centroidal Voronoi tessellation
whenever the density factors across coordinates. The package pairs the
construction with quantitative verification: independent energy
estimates, centroidality residuals, and a brute-force grid oracle.
"""

from .cvt1d import (
    Cvt1D,
    SolverConfig,
    SolverMethod,
    SolveStats,
    energy_1d,
    from_centroids,
    lloyd_step,
    quantile_init,
    solve,
    solve_lloyd,
    solve_newton,
)
from .density import (
    Density1D,
    ExpQuadraticDensity,
    GaussianDensity,
    Interval,
    SeparableDensity,
    TabulatedDensity,
    UniformDensity,
    parse_density,
)
from .energy import (
    EnergyReport,
    centroidality_residual,
    energy_grid_quadrature,
    energy_monte_carlo,
    energy_separable,
)
from .errors import (
    CapExceeded,
    ConfigError,
    CvtError,
    DomainMismatch,
    EmptyCluster,
    IndexOutOfRange,
    MaxIterationsExceeded,
    NonPositiveMass,
    OrderingViolated,
    OutOfDomain,
    SegmentOutsideDomain,
    SingularJacobian,
)
from .oracle import (
    GridDiscretization,
    grid_energy,
    lloyd_nd_solve,
    lloyd_nd_step,
    verify_fixed_point,
)
from .product import Box, IndexMatrix, ProductCvt, build_product, index_matrix

__version__ = "0.1.0"

__all__ = [
    "Box",
    "CapExceeded",
    "ConfigError",
    "Cvt1D",
    "CvtError",
    "Density1D",
    "DomainMismatch",
    "EmptyCluster",
    "EnergyReport",
    "ExpQuadraticDensity",
    "GaussianDensity",
    "GridDiscretization",
    "IndexMatrix",
    "IndexOutOfRange",
    "Interval",
    "MaxIterationsExceeded",
    "NonPositiveMass",
    "OrderingViolated",
    "OutOfDomain",
    "ProductCvt",
    "SegmentOutsideDomain",
    "SeparableDensity",
    "SingularJacobian",
    "SolveStats",
    "SolverConfig",
    "SolverMethod",
    "TabulatedDensity",
    "UniformDensity",
    "build_product",
    "centroidality_residual",
    "energy_1d",
    "energy_grid_quadrature",
    "energy_monte_carlo",
    "energy_separable",
    "from_centroids",
    "grid_energy",
    "index_matrix",
    "lloyd_nd_solve",
    "lloyd_nd_step",
    "lloyd_step",
    "parse_density",
    "quantile_init",
    "solve",
    "solve_lloyd",
    "solve_newton",
    "verify_fixed_point",
]
