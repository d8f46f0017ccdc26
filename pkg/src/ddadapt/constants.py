"""
Constants for ddadapt.

This module defines benchmark defaults, numerical tolerances, and the
enumerations used throughout the package.
"""

from enum import Enum
from typing import List, Tuple


# Benchmark geometry
DOMAIN_BOX = (0.0, 240.0, 0.0, 60.0)  # x1_min, x1_max, x2_min, x2_max
DEFAULT_N1 = 97
DEFAULT_N2 = 25
DEFAULT_PARTITION = (4, 2)  # nx, ny


# Input random field
DEFAULT_A0 = 5.0
DEFAULT_SIGMA_A = 2.5
DEFAULT_L1 = 24.0
DEFAULT_L2 = 20.0
DEFAULT_KL_DIMENSION = 10


# Boundary values
LEFT_VALUE = 100.0
RIGHT_VALUE = 10.0
WALL_VALUE = 0.0


# Stochastic discretization
DEFAULT_PC_ORDER = 3
DEFAULT_SMOLYAK_LEVEL_FULL = 5
DEFAULT_SMOLYAK_LEVEL_COARSE = 3
DEFAULT_SMOLYAK_LEVEL_ETA = 5
DEFAULT_REDUCED_DIMENSION = 3
DEFAULT_R_TOLERANCE = 1e-2

# Configured Smolyak levels are 1-based; internal levels are 0-based.
LEVEL_OFFSET = 1
MAX_LEVEL = 8


# Sample points for PDFs, one per subdomain of the 4x2 layout (D1..D8)
PDF_POINTS: List[Tuple[float, float]] = [
    (24.0, 15.0),
    (81.0, 15.0),
    (150.0, 15.0),
    (210.0, 15.0),
    (210.0, 45.0),
    (150.0, 45.0),
    (81.0, 45.0),
    (24.0, 45.0),
]
DEFAULT_PDF_SAMPLES = 100_000
MIN_PDF_SAMPLES = 100
PDF_SUPPORT_POINTS = 256
DEFAULT_MC_SAMPLES = 10_000
MIN_MC_SAMPLES = 100


# Tolerances
KL_RANK_TOL = 1e-12
NODE_MERGE_TOL = 1e-12
SOLVER_RTOL = 1e-10
ISOMETRY_TOL = 1e-10
GRAM_SCHMIDT_SKIP = 1e-8
ZERO_FIELD_ATOL = 1e-9


# Execution
DEFAULT_WORKERS = 1
DEFAULT_CHUNK_SIZE = 32
DEFAULT_SEED = 2024
CSV_FORMAT = "%.17g"


class _ChoiceEnum(str, Enum):
    """String enum with lenient parsing, shared by the enumerations below."""

    def __str__(self) -> str:
        return self.value

    @classmethod
    def all(cls) -> list:
        """Return list of all members."""
        return [member for member in cls]

    @classmethod
    def from_string(cls, value: str) -> "_ChoiceEnum":
        """
        Create a member from its string value.

        Args:
            value: Member value, case and surrounding whitespace ignored

        Returns:
            Matching enum member

        Raises:
            ValueError: If no matching member found
        """
        normalized = value.lower().strip().replace("-", "_")
        for member in cls:
            if member.value == normalized:
                return member
        valid = ", ".join(member.value for member in cls)
        raise ValueError(f"Unknown {cls.__name__}: {value}. Valid values: {valid}")


class BcVariant(_ChoiceEnum):
    """
    Boundary-condition cases of the diffusion benchmark.

    Attributes:
        MIXED: u=100 on x1=min, u=10 on x1=max, zero flux on the
               horizontal walls
        ALL_DIRICHLET: as MIXED on the vertical sides, u=0 on the
                       horizontal walls
        CONSTANT: the same Dirichlet value on all four sides (tests)

    Example:
        >>> BcVariant.from_string("all_dirichlet")
        <BcVariant.ALL_DIRICHLET: 'all_dirichlet'>
    """

    MIXED = "mixed"
    ALL_DIRICHLET = "all_dirichlet"
    CONSTANT = "constant"


class VarianceConvention(_ChoiceEnum):
    """
    How sigma_g is derived from the coefficient mean and spread.

    Attributes:
        BENCHMARK: sigma_g = sqrt(ln(1 + sigma_a / a0^2)), the ratio the
                   benchmark definition uses
        STANDARD: sigma_g = sqrt(ln(1 + sigma_a^2 / a0^2)), the usual
                  lognormal moment relation
    """

    BENCHMARK = "benchmark"
    STANDARD = "standard"


class GrowthRule(_ChoiceEnum):
    """
    Point growth of the 1D Gauss-Hermite rules inside the Smolyak sum.

    Attributes:
        LINEAR: m(l) = l + 1; reproduces the benchmark collocation counts
        ODD: m(l) = 2l + 1
    """

    LINEAR = "linear"
    ODD = "odd"

    def points(self, level: int) -> int:
        """Number of 1D points at a 0-based level."""
        if self is GrowthRule.LINEAR:
            return level + 1
        return 2 * level + 1


class KlMethod(_ChoiceEnum):
    """Discretization used for the KL eigenproblem."""

    KRONECKER = "kronecker"
    DENSE = "dense"


class VariableTag(_ChoiceEnum):
    """Germ a PC expansion is written in: original xi or adapted eta."""

    XI = "xi"
    ETA = "eta"
