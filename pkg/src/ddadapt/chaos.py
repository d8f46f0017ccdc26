"""
Hermite polynomial chaos: multi-index sets, orthonormal basis, surrogates.

Univariate factors are the probabilists' Hermite polynomials scaled by
1/sqrt(n!), so the multivariate basis is orthonormal under the standard
Gaussian measure and the variance of an expansion is the sum of its
squared non-constant coefficients.
"""

import logging
import math
from typing import Iterator, Sequence, Tuple, Union

import numpy as np
from scipy.stats import gaussian_kde

from ddadapt.constants import MIN_PDF_SAMPLES, PDF_SUPPORT_POINTS
from ddadapt.exceptions import DimensionMismatchError, ValidationError
from ddadapt.mesh import nearest_node
from ddadapt.models import MultiIndexSet, PCSolution, PdfEstimate, StructuredGrid

logger = logging.getLogger(__name__)

Seed = Union[int, Sequence[int], None]


def basis_size(d: int, p: int) -> int:
    """Number of total-order terms: (d+p)! / (d! p!)."""
    return math.comb(d + p, p)


def multi_indices(total: int, d: int) -> Iterator[Tuple[int, ...]]:
    """All d-tuples of non-negative integers summing to total, descending lex order."""
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in multi_indices(total - first, d - 1):
            yield (first,) + rest


def total_order_set(d: int, p: int) -> MultiIndexSet:
    """
    Build the graded-lexicographic multi-index set {alpha : |alpha| <= p}.

    Args:
        d: Number of germ variables, at least 1
        p: Total order, at least 0

    Returns:
        MultiIndexSet whose first rows are 0, e_1, ..., e_d.

    Example:
        >>> total_order_set(10, 3).size
        286
    """
    if d < 1 or p < 0:
        raise ValidationError("Basis needs d >= 1 and p >= 0", {"d": d, "p": p})
    rows = [alpha for degree in range(p + 1) for alpha in multi_indices(degree, d)]
    return MultiIndexSet(d=d, p=p, indices=np.array(rows, dtype=int).reshape(-1, d))


def hermite_table(x: Union[float, np.ndarray], p: int) -> np.ndarray:
    """Normalized Hermite values of orders 0..p, stacked on a new trailing axis."""
    x = np.asarray(x, dtype=float)
    table = np.empty(x.shape + (p + 1,))
    table[..., 0] = 1.0
    if p >= 1:
        table[..., 1] = x
    for n in range(1, p):
        recur = x * table[..., n] - math.sqrt(n) * table[..., n - 1]
        table[..., n + 1] = recur / math.sqrt(n + 1)
    return table


def hermite_eval(n: int, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Evaluate He_n(x) / sqrt(n!) by the three-term recurrence.

    Example:
        >>> round(hermite_eval(2, 0.0), 12)
        -0.707106781187
    """
    if n < 0:
        raise ValidationError("Hermite order must be non-negative", {"n": n})
    value = hermite_table(x, n)[..., n]
    if np.ndim(value) == 0:
        return float(value)
    return value


def psi_matrix(basis: MultiIndexSet, Z: np.ndarray) -> np.ndarray:
    """
    Evaluate every basis polynomial at a batch of germ points.

    Args:
        basis: Multi-index set
        Z: Points, shape (m, d)

    Returns:
        Array of shape (m, basis.size)
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != basis.d:
        raise DimensionMismatchError(
            "Germ length does not match basis", basis.d, Z.shape[1]
        )
    table = hermite_table(Z, basis.p)
    values = np.ones((Z.shape[0], basis.size))
    for k in range(basis.d):
        values *= table[:, k, basis.indices[:, k]]
    return values


def psi_eval(basis: MultiIndexSet, i: int, z: Sequence[float]) -> float:
    """Evaluate psi_i(z), the product of normalized Hermite factors."""
    if not 0 <= i < basis.size:
        raise ValidationError("Basis term out of range", {"i": i, "size": basis.size})
    z = np.asarray(z, dtype=float)
    if z.shape != (basis.d,):
        raise DimensionMismatchError(
            "Germ length does not match basis", basis.d, z.size
        )
    table = hermite_table(z, basis.p)
    return float(np.prod(table[np.arange(basis.d), basis.indices[i]]))


def surrogate_eval(sol: PCSolution, z: Sequence[float], node: int) -> float:
    """Evaluate sum_i coeffs[node, i] psi_i(z)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (sol.dimension,):
        raise DimensionMismatchError(
            f"Germ length does not match the {sol.variable_tag} basis",
            sol.dimension,
            z.size,
        )
    return float(psi_matrix(sol.basis, z[None, :])[0] @ sol.coeffs[node])


def surrogate_samples(
    sol: PCSolution, Z: np.ndarray, node: int, chunk_size: int = 8192
) -> np.ndarray:
    """Evaluate the surrogate at one node for many germ points, in chunks."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    out = np.empty(Z.shape[0])
    column = sol.coeffs[node]
    for start in range(0, Z.shape[0], chunk_size):
        stop = min(start + chunk_size, Z.shape[0])
        out[start:stop] = psi_matrix(sol.basis, Z[start:stop]) @ column
    return out


def moments(sol: PCSolution) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation fields of an orthonormal expansion."""
    return sol.mean.copy(), sol.std


def pdf_estimate(
    sol: PCSolution,
    grid: StructuredGrid,
    location: Sequence[float],
    n_samples: int,
    seed: Seed = None,
) -> PdfEstimate:
    """
    Estimate the density of the solution at a point by sampling the surrogate.

    Standard-normal germs are drawn in the expansion's own variables
    (xi, or eta for an adapted solution), the surrogate is evaluated at the
    grid node nearest to the location, and a Gaussian kernel density with
    Silverman's bandwidth is evaluated on 256 points spanning the samples.

    Args:
        sol: PC solution to sample
        grid: Grid the solution lives on
        location: Point inside the domain
        n_samples: Number of draws, at least 100
        seed: Seed or seed sequence for numpy's default generator

    Returns:
        PdfEstimate; degenerate (no density) if the samples do not spread.

    Raises:
        ValidationError: If n_samples < 100 or the point is outside the grid
    """
    if n_samples < MIN_PDF_SAMPLES:
        raise ValidationError(
            "Too few samples for a density estimate",
            {"n_samples": n_samples, "minimum": MIN_PDF_SAMPLES},
        )
    node = nearest_node(grid, location)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n_samples, sol.dimension))
    samples = surrogate_samples(sol, Z, node)
    point = (float(location[0]), float(location[1]))

    spread = float(np.ptp(samples))
    if spread <= 1e-12 * max(1.0, float(np.max(np.abs(samples)))):
        logger.debug("Degenerate samples at %s: no spread", point)
        return PdfEstimate(
            location=point,
            node=node,
            support=samples[:1].copy(),
            density=np.empty(0),
            samples=samples,
            degenerate=True,
        )

    kde = gaussian_kde(samples, bw_method="silverman")
    support = np.linspace(samples.min(), samples.max(), PDF_SUPPORT_POINTS)
    return PdfEstimate(
        location=point,
        node=node,
        support=support,
        density=kde(support),
        samples=samples,
    )
