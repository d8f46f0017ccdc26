"""
ddadapt - Domain-decomposed basis adaptation for stochastic diffusion

Polynomial chaos solutions of a 2D diffusion problem with a lognormal
coefficient, computed once in the full germ and once per subdomain in a
few adapted variables, then stitched and compared.

Basic Usage:
    >>> from ddadapt import RunConfig, StochasticDiffusion
    >>>
    >>> app = StochasticDiffusion(RunConfig.from_file("bench.ini"))
    >>>
    >>> # Full-dimensional reference
    >>> full = app.full()
    >>> print(f"{full.solves} solves, max std {full.std.max():.3f}")
    >>>
    >>> # Adapted solution stitched from the subdomains
    >>> adapted = app.adapt()
    >>> print(f"Interface mismatch: {adapted.max_mean_mismatch:.2e}")
    >>>
    >>> # Relative L2 errors per subdomain
    >>> for metric, region, value in app.compare("out/adapt", "out/full"):
    ...     print(metric, region, value)

Lower-level pieces (grids, KL expansion, sparse grids, the finite-volume
solver, the adaptation map) are importable from their modules.
"""

__version__ = "0.3.0"
__author__ = "ddadapt developers"

# Main driver
from ddadapt.pipeline import StochasticDiffusion

# Configuration
from ddadapt.config import RunConfig

# Constants and enums
from ddadapt.constants import (
    BcVariant,
    GrowthRule,
    KlMethod,
    VariableTag,
    VarianceConvention,
)

# Exception classes
from ddadapt.exceptions import (
    DDAdaptError,
    ValidationError,
    DimensionMismatchError,
    ConfigError,
    NumericalError,
    SolverError,
    SingularSystemError,
    RankError,
    CollocationError,
    ZeroNormError,
)

# Data models
from ddadapt.models import (
    AdaptationMap,
    BcCase,
    Box,
    McResult,
    PCSolution,
    PdfEstimate,
    SparseGrid,
    StageCost,
    StitchedSolution,
    StructuredGrid,
    SubdomainPartition,
)

# Public API
__all__ = [
    # Version info
    "__version__",
    "__author__",
    # Main driver
    "StochasticDiffusion",
    # Configuration
    "RunConfig",
    # Enums
    "BcVariant",
    "GrowthRule",
    "KlMethod",
    "VariableTag",
    "VarianceConvention",
    # Exceptions
    "DDAdaptError",
    "ValidationError",
    "DimensionMismatchError",
    "ConfigError",
    "NumericalError",
    "SolverError",
    "SingularSystemError",
    "RankError",
    "CollocationError",
    "ZeroNormError",
    # Models
    "AdaptationMap",
    "BcCase",
    "Box",
    "McResult",
    "PCSolution",
    "PdfEstimate",
    "SparseGrid",
    "StageCost",
    "StitchedSolution",
    "StructuredGrid",
    "SubdomainPartition",
]
