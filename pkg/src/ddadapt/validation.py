"""
Monte-Carlo reference solution and error metrics.
"""

import logging
import time
from typing import Optional, Sequence

import numpy as np
from scipy.stats import ks_2samp

from ddadapt.collocation import solve_at
from ddadapt.constants import DEFAULT_CHUNK_SIZE, DEFAULT_WORKERS, MIN_MC_SAMPLES
from ddadapt.constants import ZERO_FIELD_ATOL
from ddadapt.exceptions import DimensionMismatchError, ValidationError, ZeroNormError
from ddadapt.models import BcCase, McResult, RandomFieldModel, StructuredGrid

logger = logging.getLogger(__name__)


class RunningMoments:
    """
    Streaming mean and variance of a field (Welford's update).

    Example:
        >>> acc = RunningMoments(3)
        >>> for row in np.eye(3):
        ...     acc.update(row)
        >>> acc.mean
        array([0.33333333, 0.33333333, 0.33333333])
    """

    def __init__(self, size: int) -> None:
        self.n = 0
        self.mean = np.zeros(size)
        self._m2 = np.zeros(size)

    def update(self, sample: np.ndarray) -> None:
        """Add one sample."""
        self.n += 1
        delta = sample - self.mean
        self.mean += delta / self.n
        self._m2 += delta * (sample - self.mean)

    def update_batch(self, samples: np.ndarray) -> None:
        """Add the rows of a 2D array in order."""
        for sample in samples:
            self.update(sample)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased variance; zero until two samples are seen."""
        if self.n < 2:
            return np.zeros_like(self._m2)
        return self._m2 / (self.n - 1)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)


def sample_germs(d: int, n: int, seed: int) -> np.ndarray:
    """Standard normal germs, row i drawn from the stream keyed by (seed, i)."""
    return np.vstack(
        [np.random.default_rng([seed, index]).standard_normal(d) for index in range(n)]
    )


def mc_reference(
    model: RandomFieldModel,
    grid: StructuredGrid,
    bc: BcCase,
    n: int,
    seed: int,
    workers: int = DEFAULT_WORKERS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    source: float = 0.0,
) -> McResult:
    """
    Monte-Carlo mean and standard deviation of the solution.

    Sample i uses the generator keyed by (seed, i), so a result does not
    depend on the worker count and a run can be split by sample index.

    Args:
        model: KL model of the log-coefficient
        grid: Spatial grid
        bc: Boundary data
        n: Number of samples, at least 100
        seed: Base seed
        workers: Thread count for the solves

    Returns:
        McResult with the sample mean and unbiased std fields.

    Raises:
        ValidationError: If n < 100
        CollocationError: With the index of the sample whose solve failed
    """
    if n < MIN_MC_SAMPLES:
        raise ValidationError(
            "Too few Monte-Carlo samples", {"n": n, "minimum": MIN_MC_SAMPLES}
        )
    tic = time.perf_counter()
    xi = sample_germs(model.d, n, seed)
    acc = RunningMoments(grid.n_nodes)
    for _, block in solve_at(model, grid, bc, xi, workers, chunk_size, "mc", source):
        acc.update_batch(block)
    seconds = time.perf_counter() - tic
    logger.info("Monte-Carlo: %d samples in %.2fs", n, seconds)
    return McResult(mean=acc.mean, std=acc.std, n=n, seconds=seconds)


def rel_l2_error(
    f: np.ndarray,
    g: np.ndarray,
    weights: Optional[np.ndarray] = None,
    region: Optional[Sequence[int]] = None,
) -> float:
    """
    Weighted relative L2 error ||f - g|| / ||g|| on a set of nodes.

    Args:
        f: Field to assess
        g: Reference field
        weights: Quadrature weights per node; uniform when omitted
        region: Node indices to restrict to; all nodes when omitted

    Raises:
        DimensionMismatchError: If the fields differ in size
        ZeroNormError: If the reference has zero norm on the region

    Example:
        >>> rel_l2_error(1.01 * np.ones(4), np.ones(4))
        0.01
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise DimensionMismatchError("Fields differ in size", g.size, f.size)
    w = np.ones_like(g) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != g.shape:
        raise DimensionMismatchError(
            "Weights differ in size from the fields", g.size, w.size
        )
    if region is not None:
        idx = np.asarray(region, dtype=int)
        f, g, w = f[idx], g[idx], w[idx]

    denominator = float(np.sqrt(np.sum(w * g**2)))
    if denominator == 0.0:
        raise ZeroNormError(context={"nodes": int(g.size)})
    return float(np.sqrt(np.sum(w * (f - g) ** 2)) / denominator)


def ks_distance(samples_a: Sequence[float], samples_b: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValidationError(
            "Sample sets must be non-empty", {"a": a.size, "b": b.size}
        )
    return float(ks_2samp(a, b).statistic)


def field_error(
    f: np.ndarray,
    g: np.ndarray,
    weights: Optional[np.ndarray] = None,
    region: Optional[Sequence[int]] = None,
    atol: float = ZERO_FIELD_ATOL,
) -> float:
    """
    Relative L2 error that tolerates a vanishing reference.

    Both fields below atol on the region count as agreement (0.0); a
    reference below atol with a non-vanishing field gives inf.

    Raises:
        DimensionMismatchError: If the fields differ in size
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise DimensionMismatchError("Fields differ in size", g.size, f.size)
    idx = slice(None) if region is None else np.asarray(region, dtype=int)
    if np.max(np.abs(g[idx]), initial=0.0) > atol:
        return rel_l2_error(f, g, weights, region)
    if np.max(np.abs(f[idx]), initial=0.0) <= atol:
        return 0.0
    logger.warning("Reference field vanishes where the compared field does not")
    return float("inf")
