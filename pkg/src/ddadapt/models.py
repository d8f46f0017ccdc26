"""
Data models for ddadapt.

This module defines the dataclasses passed between the pipeline stages:
grids and partitions, the input random field, polynomial chaos
solutions, sparse grids, linear systems, and basis-adaptation results.
All of them are treated as immutable once built.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from ddadapt.constants import BcVariant, GrowthRule, LEFT_VALUE, RIGHT_VALUE
from ddadapt.constants import VariableTag, VarianceConvention, WALL_VALUE
from ddadapt.exceptions import ValidationError


@dataclass(frozen=True)
class Box:
    """
    Axis-aligned rectangle [x1_min, x1_max] x [x2_min, x2_max].

    Example:
        >>> Box(0.0, 240.0, 0.0, 60.0).area
        14400.0
    """

    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float

    @property
    def area(self) -> float:
        return (self.x1_max - self.x1_min) * (self.x2_max - self.x2_min)

    def contains(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        """True if the point lies in the closed box."""
        x1, x2 = float(point[0]), float(point[1])
        return (
            self.x1_min - tol <= x1 <= self.x1_max + tol
            and self.x2_min - tol <= x2 <= self.x2_max + tol
        )

    def to_dict(self) -> Dict[str, float]:
        """Convert to dictionary representation."""
        return {
            "x1_min": self.x1_min,
            "x1_max": self.x1_max,
            "x2_min": self.x2_min,
            "x2_max": self.x2_max,
        }


@dataclass(frozen=True, eq=False)
class StructuredGrid:
    """
    Tensor grid of n1 x n2 nodes over a box.

    Nodes are ordered row-major with x1 running fastest, so node
    k = j * n1 + i sits at (x1[i], x2[j]).

    Attributes:
        box: Rectangle covered by the grid
        n1: Node count along x1
        n2: Node count along x2
    """

    box: Box
    n1: int
    n2: int

    @property
    def h1(self) -> float:
        return (self.box.x1_max - self.box.x1_min) / (self.n1 - 1)

    @property
    def h2(self) -> float:
        return (self.box.x2_max - self.box.x2_min) / (self.n2 - 1)

    @property
    def n_nodes(self) -> int:
        return self.n1 * self.n2

    @cached_property
    def x1(self) -> np.ndarray:
        return np.linspace(self.box.x1_min, self.box.x1_max, self.n1)

    @cached_property
    def x2(self) -> np.ndarray:
        return np.linspace(self.box.x2_min, self.box.x2_max, self.n2)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, 2)."""
        xx1, xx2 = np.meshgrid(self.x1, self.x2)
        return np.column_stack([xx1.ravel(), xx2.ravel()])

    def index(self, i: int, j: int) -> int:
        """Flat index of the node in column i, row j."""
        return j * self.n1 + i


@dataclass(frozen=True, eq=False)
class SubdomainPartition:
    """
    Disjoint labeling of grid nodes into nx * ny rectangular subdomains.

    Labels run from 1 to S. Box s-1 is the closed rectangle of subdomain s;
    a node on a shared edge carries the lowest label among its boxes.

    Attributes:
        nx: Subdomain columns
        ny: Subdomain rows
        labels: Per-node subdomain label
        boxes: Closed rectangle per subdomain, in label order
    """

    nx: int
    ny: int
    labels: np.ndarray
    boxes: Tuple[Box, ...]

    @property
    def S(self) -> int:
        return len(self.boxes)

    def nodes_of(self, s: int) -> np.ndarray:
        """Indices of nodes labeled s."""
        return np.flatnonzero(self.labels == s)

    def locate(self, point: Sequence[float]) -> int:
        """Lowest label whose closed box contains the point."""
        for s, box in enumerate(self.boxes, start=1):
            if box.contains(point):
                return s
        raise ValidationError(
            "Point lies outside every subdomain", {"point": tuple(point)}
        )

    def sizes(self) -> Dict[int, int]:
        """Node count per label."""
        return {s: int(np.sum(self.labels == s)) for s in range(1, self.S + 1)}


@dataclass(frozen=True, eq=False)
class QuadratureWeights:
    """Per-node positive area weights discretizing an integral over D."""

    w: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.w))


@dataclass(frozen=True)
class LognormalSpec:
    """
    Lognormal coefficient a = exp(g) described by its mean and spread.

    Attributes:
        a0: Coefficient mean
        sigma_a: Coefficient spread as entered (see VarianceConvention)
        sigma_g: Standard deviation of the Gaussian field g
        g0: Mean of g
        convention: Formula used to derive sigma_g and g0
    """

    a0: float
    sigma_a: float
    sigma_g: float
    g0: float
    convention: VarianceConvention = VarianceConvention.BENCHMARK


@dataclass(frozen=True)
class CovarianceKernel:
    """
    Squared-exponential covariance of the Gaussian field g.

    C(x, y) = sigma_g^2 exp(-(x1-y1)^2/l1^2 - (x2-y2)^2/l2^2)
    """

    sigma_g: float
    l1: float
    l2: float


@dataclass(frozen=True, eq=False)
class RandomFieldModel:
    """
    Truncated KL expansion of the Gaussian log-coefficient on grid nodes.

    g(x, xi) = g0(x) + sum_i sqrt(lambdas[i]) modes[:, i] xi_i

    Attributes:
        g0: Mean field, shape (n_nodes,)
        lambdas: Eigenvalues, non-increasing, shape (d,)
        modes: Eigenfunctions on grid nodes, shape (n_nodes, d)
        captured_variance: Fraction of the integrated variance kept
    """

    g0: np.ndarray
    lambdas: np.ndarray
    modes: np.ndarray
    captured_variance: float = 1.0

    @property
    def d(self) -> int:
        return int(self.lambdas.shape[0])

    @property
    def n_nodes(self) -> int:
        return int(self.g0.shape[0])

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(self.lambdas == 0.0))


@dataclass(frozen=True, eq=False)
class MultiIndexSet:
    """
    Total-order multi-index set in graded-lexicographic order.

    Row 0 is the zero tuple; rows 1..d are the unit vectors e_1..e_d.

    Attributes:
        d: Number of germ variables
        p: Total order
        indices: Integer array, shape (size, d)
    """

    d: int
    p: int
    indices: np.ndarray

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    def index_of(self, alpha: Sequence[int]) -> int:
        """Row of a given multi-index."""
        matches = np.flatnonzero(np.all(self.indices == np.asarray(alpha), axis=1))
        if matches.size == 0:
            raise ValidationError(
                "Multi-index not in basis", {"alpha": tuple(alpha), "p": self.p}
            )
        return int(matches[0])

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True, eq=False)
class AdaptationMap:
    """
    Rotation eta = A xi adapted to one subdomain.

    Attributes:
        subdomain: Label of the subdomain the basis is adapted to
        mu: Hilbert-KL eigenvalues on the subdomain, non-increasing
        phi: Eigenfunctions on the subdomain nodes, shape (n_s, len(mu))
        A: Orthogonal d x d matrix; rows 1..r come from the eigenpairs
        r: Retained dimension
        nodes: Grid indices of the closed subdomain
    """

    subdomain: int
    mu: np.ndarray
    phi: np.ndarray
    A: np.ndarray
    r: int
    nodes: np.ndarray

    @property
    def d(self) -> int:
        return int(self.A.shape[0])

    @property
    def reduced_inverse(self) -> np.ndarray:
        """First r columns of A^{-1} = A^T, shape (d, r)."""
        return self.A[: self.r].T

    @property
    def orthogonality_error(self) -> float:
        """max |A A^T - I|."""
        return float(np.max(np.abs(self.A @ self.A.T - np.eye(self.d))))


@dataclass(frozen=True, eq=False)
class PCSolution:
    """
    Polynomial chaos coefficients of the solution at every grid node.

    Column 0 multiplies psi_0 = 1, so it is the mean field; with an
    orthonormal basis the variance is the row-wise sum of squares of the
    remaining columns.

    Attributes:
        basis: Multi-index set the columns refer to
        coeffs: Coefficient table, shape (n_nodes, basis.size)
        variable_tag: Germ the expansion is written in (xi or eta)
        subdomain: Subdomain an eta expansion is adapted to
        adaptation: Rotation behind an eta expansion
        meta: Run metadata (stage, solves, seconds, level)

    Example:
        >>> sol = run_full(model, grid, bc, basis, sg)
        >>> print(f"Q = {sol.solves}, max std = {sol.std.max():.3f}")
    """

    basis: MultiIndexSet
    coeffs: np.ndarray
    variable_tag: VariableTag = VariableTag.XI
    subdomain: Optional[int] = None
    adaptation: Optional[AdaptationMap] = None
    meta: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return int(self.coeffs.shape[0])

    @property
    def dimension(self) -> int:
        return self.basis.d

    @property
    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0]

    @property
    def variance(self) -> np.ndarray:
        return np.sum(self.coeffs[:, 1:] ** 2, axis=1)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)

    @property
    def stage(self) -> str:
        return str(self.meta.get("stage", ""))

    @property
    def solves(self) -> int:
        """Deterministic solves spent on this solution."""
        return int(self.meta.get("solves", 0))

    @property
    def seconds(self) -> float:
        """Wall time spent on the deterministic solves."""
        return float(self.meta.get("seconds", 0.0))


@dataclass(frozen=True, eq=False)
class PdfEstimate:
    """
    Kernel density estimate of the solution at one location.

    Attributes:
        location: Requested point
        node: Grid node the surrogate was evaluated at
        support: Evaluation points of the density
        density: Density values on the support (empty when degenerate)
        samples: Raw surrogate samples
        degenerate: True when the samples have no spread
    """

    location: Tuple[float, float]
    node: int
    support: np.ndarray
    density: np.ndarray
    samples: np.ndarray = field(repr=False)
    degenerate: bool = False

    @property
    def integral(self) -> float:
        if self.degenerate:
            return 1.0
        return float(trapezoid(self.density, self.support))


@dataclass(frozen=True, eq=False)
class SparseGrid:
    """
    Smolyak quadrature for the standard Gaussian measure in d dimensions.

    Attributes:
        d: Dimension
        level: 0-based Smolyak level
        nodes: Unique nodes, shape (size, d)
        weights: Weights, may be negative, summing to 1
        growth: 1D growth rule the grid was built with
    """

    d: int
    level: int
    nodes: np.ndarray
    weights: np.ndarray
    growth: GrowthRule = GrowthRule.LINEAR

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def exactness(self) -> int:
        """
        Total polynomial degree the grid is guaranteed to integrate exactly.

        LINEAR gives 2 level + 1. ODD gives 4 level - 2d + 3 while
        d <= level (4 level + 1 in one dimension) and 2 level + 1 after.
        """
        if self.growth is GrowthRule.LINEAR or self.d > self.level:
            return 2 * self.level + 1
        return 4 * self.level - 2 * self.d + 3

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class BcCase:
    """
    Boundary data for the diffusion problem.

    The vertical sides x1 = min and x1 = max always carry Dirichlet
    values; a horizontal wall with value None is a zero-flux wall.

    Example:
        >>> BcCase.mixed().top is None
        True
    """

    variant: BcVariant
    left: float = LEFT_VALUE
    right: float = RIGHT_VALUE
    bottom: Optional[float] = None
    top: Optional[float] = None

    @classmethod
    def mixed(cls) -> "BcCase":
        """Dirichlet left/right, zero flux top/bottom."""
        return cls(BcVariant.MIXED)

    @classmethod
    def all_dirichlet(cls) -> "BcCase":
        """Dirichlet on all four sides, zero on the horizontal walls."""
        return cls(BcVariant.ALL_DIRICHLET, bottom=WALL_VALUE, top=WALL_VALUE)

    @classmethod
    def constant(cls, value: float) -> "BcCase":
        """The same Dirichlet value on all four sides."""
        return cls(BcVariant.CONSTANT, value, value, value, value)

    @classmethod
    def from_variant(cls, variant: BcVariant) -> "BcCase":
        if variant is BcVariant.MIXED:
            return cls.mixed()
        if variant is BcVariant.ALL_DIRICHLET:
            return cls.all_dirichlet()
        raise ValueError(f"Variant {variant} needs an explicit value")


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """
    Assembled finite-volume system for one coefficient realization.

    Attributes:
        matrix: Reduced SPD matrix on the free nodes (CSR)
        rhs: Reduced right-hand side with Dirichlet values eliminated
        free: Grid indices of the unknowns
        dirichlet: Grid indices of the Dirichlet nodes
        dirichlet_values: Prescribed values at those nodes
        full_matrix: Operator on all nodes before elimination (CSR)
        full_rhs: Source term on all nodes
        sides: Dirichlet node indices grouped by side name
        cell_area: h1 * h2, the scale the rows were divided by
    """

    matrix: Any
    rhs: np.ndarray
    free: np.ndarray
    dirichlet: np.ndarray
    dirichlet_values: np.ndarray
    full_matrix: Any
    full_rhs: np.ndarray
    sides: Dict[str, np.ndarray] = field(default_factory=dict)
    cell_area: float = 1.0

    @property
    def n_nodes(self) -> int:
        return int(self.full_rhs.shape[0])


@dataclass(frozen=True, eq=False)
class DeterministicSolution:
    """Nodal solution of one deterministic solve and its relative residual."""

    values: np.ndarray
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class SubdomainCovariance:
    """
    Covariance of the Gaussian part of the solution on a closed subdomain.

    Held in factored form: C = factor @ factor.T, where column j of the
    factor is the linear PC coefficient u_j restricted to the subdomain.

    Attributes:
        subdomain: Label of the subdomain
        nodes: Grid indices of the closed subdomain
        factor: Linear coefficients on those nodes, shape (n_s, d)
        weights: Trapezoid weights of the subdomain sub-grid
    """

    subdomain: int
    nodes: np.ndarray
    factor: np.ndarray
    weights: np.ndarray

    @property
    def d(self) -> int:
        return int(self.factor.shape[1])

    @property
    def matrix(self) -> np.ndarray:
        return self.factor @ self.factor.T

    @property
    def diagonal(self) -> np.ndarray:
        return np.sum(self.factor**2, axis=1)

    @property
    def weighted_trace(self) -> float:
        """sum_k w_k C(x_k, x_k)."""
        return float(np.sum(self.weights * self.diagonal))


@dataclass(frozen=True)
class InterfaceRecord:
    """Mismatch of two adjacent adapted solutions at one shared node."""

    node: int
    x1: float
    x2: float
    subdomain_a: int
    subdomain_b: int
    mean_mismatch: float
    std_mismatch: float

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary representation."""
        return {
            "node": self.node,
            "x1": self.x1,
            "x2": self.x2,
            "subdomain_a": self.subdomain_a,
            "subdomain_b": self.subdomain_b,
            "mean_mismatch": self.mean_mismatch,
            "std_mismatch": self.std_mismatch,
        }


@dataclass(frozen=True, eq=False)
class StitchedSolution:
    """
    Global statistics assembled from per-subdomain adapted solutions.

    Attributes:
        solutions: Adapted solution per subdomain label
        labels: Per-node label used to pick the solution
        mean: Stitched mean field
        std: Stitched standard deviation field
        interface: Mismatch records at nodes shared by two subdomains
    """

    solutions: Dict[int, PCSolution]
    labels: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    interface: List[InterfaceRecord] = field(default_factory=list)

    @property
    def max_mean_mismatch(self) -> float:
        return max((rec.mean_mismatch for rec in self.interface), default=0.0)

    @property
    def max_std_mismatch(self) -> float:
        return max((rec.std_mismatch for rec in self.interface), default=0.0)

    def get_subdomain(self, s: int) -> Optional[PCSolution]:
        """Adapted solution of one subdomain."""
        return self.solutions.get(s)


@dataclass(frozen=True)
class StageCost:
    """Deterministic-solve count and wall time of one pipeline stage."""

    stage: str
    solves: int
    seconds: float = 0.0

    @classmethod
    def from_solution(cls, solution: PCSolution) -> "StageCost":
        """Read the cost recorded in a solution's metadata."""
        return cls(
            stage=solution.stage, solves=solution.solves, seconds=solution.seconds
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary representation."""
        return {"stage": self.stage, "solves": self.solves, "seconds": self.seconds}


@dataclass(frozen=True, eq=False)
class McResult:
    """
    Monte-Carlo estimate of the solution moments.

    Attributes:
        mean: Sample mean field
        std: Sample standard deviation field (unbiased)
        n: Number of samples
        seconds: Wall time of the sampling loop
    """

    mean: np.ndarray
    std: np.ndarray
    n: int
    seconds: float = 0.0

    @property
    def stderr(self) -> np.ndarray:
        """Standard error of the mean, node-wise."""
        return self.std / np.sqrt(self.n)
