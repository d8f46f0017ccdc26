"""
Gaussian log-coefficient field: kernel, lognormal transform, KL solve.

The KL eigenproblem is discretized with the Nystrom method on the grid's
trapezoid weights: the symmetric matrix W^{1/2} C W^{1/2} is diagonalized
and its eigenvectors are rescaled by W^{-1/2}, giving modes that are
orthonormal under the discrete inner product sum_k w_k f(x_k) g(x_k).
"""

import logging
import math
from typing import Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from ddadapt.constants import KL_RANK_TOL, KlMethod, VarianceConvention
from ddadapt.exceptions import DimensionMismatchError, RankError, ValidationError
from ddadapt.models import (
    CovarianceKernel,
    LognormalSpec,
    QuadratureWeights,
    RandomFieldModel,
    StructuredGrid,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]


def kernel_eval(
    k: CovarianceKernel, x: ArrayLike, y: ArrayLike
) -> Union[float, np.ndarray]:
    """
    Evaluate the squared-exponential covariance.

    Args:
        k: Kernel parameters
        x: Point(s), trailing axis of length 2
        y: Point(s), broadcastable against x

    Returns:
        sigma_g^2 exp(-(x1-y1)^2/l1^2 - (x2-y2)^2/l2^2)

    Example:
        >>> kernel_eval(CovarianceKernel(1.0, 24.0, 20.0), (24.0, 0.0), (0.0, 0.0))
        0.36787944117144233
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = x - y
    value = k.sigma_g**2 * np.exp(
        -(diff[..., 0] ** 2) / k.l1**2 - (diff[..., 1] ** 2) / k.l2**2
    )
    if np.ndim(value) == 0:
        return float(value)
    return value


def kernel_matrix(k: CovarianceKernel, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Kernel values between two point sets, shape (len(X), len(Y))."""
    return np.asarray(kernel_eval(k, X[:, None, :], Y[None, :, :]))


def lognormal_params(
    a0: float,
    sigma_a: float,
    convention: VarianceConvention = VarianceConvention.BENCHMARK,
) -> Tuple[float, float]:
    """
    Parameters of g = log(a) for a lognormal coefficient a.

    With the BENCHMARK convention the ratio inside the logarithm is
    sigma_a / a0^2, exactly as the benchmark states it; STANDARD uses
    sigma_a^2 / a0^2.

    Args:
        a0: Mean of a, positive
        sigma_a: Spread of a, non-negative
        convention: Which ratio to use

    Returns:
        (sigma_g, g0)

    Raises:
        ValidationError: If a0 <= 0 or sigma_a < 0
    """
    if a0 <= 0:
        raise ValidationError("Coefficient mean must be positive", {"a0": a0})
    if sigma_a < 0:
        raise ValidationError(
            "Coefficient spread must be non-negative", {"sigma_a": sigma_a}
        )

    if convention is VarianceConvention.BENCHMARK:
        ratio = sigma_a / a0**2
    else:
        ratio = sigma_a**2 / a0**2
    sigma_g = math.sqrt(math.log1p(ratio))
    g0 = math.log(a0 / math.sqrt(1.0 + ratio))
    return sigma_g, g0


def lognormal_spec(
    a0: float,
    sigma_a: float,
    convention: VarianceConvention = VarianceConvention.BENCHMARK,
) -> LognormalSpec:
    """Bundle lognormal_params with its inputs."""
    sigma_g, g0 = lognormal_params(a0, sigma_a, convention)
    return LognormalSpec(
        a0=a0, sigma_a=sigma_a, sigma_g=sigma_g, g0=g0, convention=convention
    )


def kl_solve(
    k: CovarianceKernel,
    grid: StructuredGrid,
    w: QuadratureWeights,
    d: int,
    g0: ArrayLike = 0.0,
    method: KlMethod = KlMethod.KRONECKER,
) -> RandomFieldModel:
    """
    Solve the discrete KL eigenproblem and keep the d leading pairs.

    The KRONECKER method uses that both the kernel and the trapezoid
    weights factor over the two axes, so W^{1/2} C W^{1/2} equals
    sigma_g^2 K2 (x) K1 and its eigenpairs are products of 1D ones. DENSE
    forms the full matrix and is meant for cross-checks on small grids.

    Args:
        k: Covariance kernel
        grid: Grid the field lives on
        w: Trapezoid weights of the grid
        d: Number of modes to keep
        g0: Mean of the field, scalar or per-node
        method: Eigen-solve strategy

    Returns:
        RandomFieldModel with non-increasing eigenvalues and w-orthonormal
        modes, each scaled so its largest-magnitude entry is positive.

    Raises:
        ValidationError: If d is not in 1..n_nodes
        RankError: If fewer than d eigenvalues exceed 1e-12 * lambda_1
    """
    n = grid.n_nodes
    if not 1 <= d <= n:
        raise ValidationError(
            "KL dimension must lie in 1..n_nodes", {"d": d, "n_nodes": n}
        )

    if method is KlMethod.KRONECKER:
        lambdas, vectors = _kl_kronecker(k, grid, d)
    else:
        lambdas, vectors = _kl_dense(k, grid, w, d)

    threshold = KL_RANK_TOL * max(float(lambdas[0]), 0.0)
    if lambdas[0] <= 0 or lambdas[-1] <= threshold:
        rank = int(np.sum(lambdas > threshold)) if lambdas[0] > 0 else 0
        raise RankError("Kernel has fewer positive eigenvalues than requested", d, rank)

    modes = vectors / np.sqrt(w.w)[:, None]
    modes = fix_signs(modes)

    total_variance = float(np.sum(w.w) * k.sigma_g**2)
    captured = float(np.sum(lambdas) / total_variance)
    logger.info(
        "KL solve (%s): d=%d, lambda_1=%.6g, lambda_d=%.6g, captured variance %.4f",
        method.value,
        d,
        lambdas[0],
        lambdas[-1],
        captured,
    )
    mean = np.broadcast_to(np.asarray(g0, dtype=float), (n,)).copy()
    return RandomFieldModel(
        g0=mean, lambdas=lambdas, modes=modes, captured_variance=captured
    )


def _kl_dense(
    k: CovarianceKernel, grid: StructuredGrid, w: QuadratureWeights, d: int
) -> Tuple[np.ndarray, np.ndarray]:
    n = grid.n_nodes
    sw = np.sqrt(w.w)
    C = kernel_matrix(k, grid.nodes, grid.nodes)
    K = sw[:, None] * C * sw[None, :]
    vals, vecs = scipy.linalg.eigh(K, subset_by_index=[n - d, n - 1])
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def _kl_kronecker(
    k: CovarianceKernel, grid: StructuredGrid, d: int
) -> Tuple[np.ndarray, np.ndarray]:
    vals1, vecs1 = _axis_factor(grid.x1, k.l1)
    vals2, vecs2 = _axis_factor(grid.x2, k.l2)

    products = k.sigma_g**2 * np.outer(vals2, vals1).ravel()
    order = np.argsort(-products, kind="stable")[:d]
    lambdas = products[order]
    rows, cols = np.divmod(order, vals1.shape[0])
    vectors = np.column_stack(
        [np.kron(vecs2[:, b], vecs1[:, a]) for b, a in zip(rows, cols)]
    )
    return lambdas, vectors


def _axis_factor(x: np.ndarray, length: float) -> Tuple[np.ndarray, np.ndarray]:
    h = x[1] - x[0]
    w = np.full(x.shape[0], h)
    w[[0, -1]] *= 0.5
    sw = np.sqrt(w)
    C = np.exp(-((x[:, None] - x[None, :]) ** 2) / length**2)
    vals, vecs = scipy.linalg.eigh(sw[:, None] * C * sw[None, :])
    return vals[::-1], vecs[:, ::-1]


def fix_signs(modes: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    peak = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[peak, np.arange(modes.shape[1])])
    signs[signs == 0] = 1.0
    return modes * signs[None, :]


def deterministic_model(
    grid: StructuredGrid, g0: ArrayLike, d: int
) -> RandomFieldModel:
    """A model with d germ variables that do not affect the field."""
    n = grid.n_nodes
    return RandomFieldModel(
        g0=np.broadcast_to(np.asarray(g0, dtype=float), (n,)).copy(),
        lambdas=np.zeros(d),
        modes=np.zeros((n, d)),
        captured_variance=0.0,
    )


def realize_g(model: RandomFieldModel, xi: ArrayLike) -> np.ndarray:
    """
    Evaluate g(x, xi) = g0(x) + sum_i sqrt(lambda_i) g_i(x) xi_i on all nodes.

    Args:
        model: KL model
        xi: Germ of length d, or a batch of shape (m, d)

    Returns:
        Field of shape (n_nodes,) or (m, n_nodes)

    Raises:
        DimensionMismatchError: If the trailing axis of xi is not d
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != model.d:
        raise DimensionMismatchError(
            "Germ length does not match KL dimension", model.d, xi.shape[-1]
        )
    scaled = xi * np.sqrt(model.lambdas)
    return model.g0 + scaled @ model.modes.T


def realize_a(model: RandomFieldModel, xi: ArrayLike) -> np.ndarray:
    """Evaluate the coefficient a(x, xi) = exp(g(x, xi))."""
    return np.exp(realize_g(model, xi))


def pointwise_variance(model: RandomFieldModel) -> np.ndarray:
    """Variance of the truncated field at each node: sum_i lambda_i g_i(x)^2."""
    return (model.modes**2) @ model.lambdas


def captured_variance(
    model: RandomFieldModel, k: CovarianceKernel, w: QuadratureWeights
) -> float:
    """Fraction sum(lambda) / sum_k w_k C(x_k, x_k) of the variance kept."""
    total = float(np.sum(w.w) * k.sigma_g**2)
    if total <= 0.0:
        return 0.0
    return float(np.sum(model.lambdas) / total)
