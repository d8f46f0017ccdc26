"""
Basis adaptation on the subdomains of a partition.

For each subdomain the Gaussian part of a cheap first-order solution
gives a covariance C_s(x, y) = sum_j u_j(x) u_j(y). Its weighted
eigenpairs (mu_i, phi_i) define new standard normal variables
eta_i = (1/sqrt(mu_i)) sum_j (sum_k w_k u_j(x_k) phi_i(x_k)) xi_j, so a
few leading eta capture most of the local variability. The row vectors
of those coefficients are completed to an orthogonal matrix A, the
reduced problem is solved by collocation over eta_1..eta_r, and the
per-subdomain results are stitched into global fields.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ddadapt.chaos import psi_matrix, total_order_set
from ddadapt.collocation import check_exactness, collocate
from ddadapt.constants import DEFAULT_CHUNK_SIZE, DEFAULT_R_TOLERANCE, DEFAULT_WORKERS
from ddadapt.constants import GRAM_SCHMIDT_SKIP, ISOMETRY_TOL, KL_RANK_TOL
from ddadapt.constants import LEVEL_OFFSET, GrowthRule, VariableTag
from ddadapt.diffusion_solver import FieldLike
from ddadapt.exceptions import DimensionMismatchError, NumericalError, RankError
from ddadapt.exceptions import ValidationError
from ddadapt.mesh import interface_nodes, subdomain_nodes, subdomain_weights
from ddadapt.models import AdaptationMap, BcCase, InterfaceRecord, MultiIndexSet
from ddadapt.models import PCSolution, RandomFieldModel, StageCost, StitchedSolution
from ddadapt.models import StructuredGrid, SubdomainCovariance, SubdomainPartition
from ddadapt.random_field import fix_signs
from ddadapt.sparse_grid import smolyak
from ddadapt.validation import rel_l2_error

logger = logging.getLogger(__name__)

ReducedDimension = Union[int, None, Mapping[int, Optional[int]]]


def subdomain_covariance(
    gauss: PCSolution, part: SubdomainPartition, s: int, grid: StructuredGrid
) -> SubdomainCovariance:
    """
    Covariance of the Gaussian part restricted to the closed box of subdomain s.

    Args:
        gauss: Solution whose linear terms u_1..u_d are used; p >= 1
        part: Partition of the grid
        s: Subdomain label
        grid: Grid the solution lives on

    Returns:
        SubdomainCovariance holding the factor [u_1 .. u_d] on the box nodes.

    Raises:
        ValidationError: If the solution has no linear terms or the box is empty
    """
    if gauss.basis.p < 1:
        raise ValidationError("Solution has no linear terms", {"p": gauss.basis.p})
    if gauss.n_nodes != grid.n_nodes:
        raise DimensionMismatchError(
            "Solution does not live on this grid", grid.n_nodes, gauss.n_nodes
        )
    nodes = subdomain_nodes(grid, part, s)
    if nodes.size == 0:
        raise ValidationError("Subdomain has no nodes", {"subdomain": s})
    d = gauss.dimension
    return SubdomainCovariance(
        subdomain=s,
        nodes=nodes,
        factor=gauss.coeffs[nodes, 1 : d + 1].copy(),
        weights=subdomain_weights(grid, part, s),
    )


def hilbert_kl(cov: SubdomainCovariance) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weighted eigenpairs of a subdomain covariance.

    W^{1/2} C W^{1/2} = B B^T with B = W^{1/2} [u_1 .. u_d], so the
    eigenpairs come from the thin SVD of B and there are at most d of
    them. Eigenfunctions are rescaled by W^{-1/2} and sign-fixed.

    Returns:
        (mu, phi): d eigenvalues, non-increasing and non-negative, and
        eigenfunctions of shape (n_s, d), orthonormal in the weighted
        inner product wherever mu > 0.
    """
    sw = np.sqrt(cov.weights)
    left, sigma, _ = np.linalg.svd(sw[:, None] * cov.factor, full_matrices=False)
    k = sigma.shape[0]
    mu = np.zeros(cov.d)
    mu[:k] = sigma**2
    phi = np.zeros((cov.nodes.shape[0], cov.d))
    phi[:, :k] = fix_signs(left / sw[:, None])
    logger.debug(
        "Subdomain %d spectrum: %s",
        cov.subdomain,
        np.array2string(mu[: min(4, cov.d)], precision=4),
    )
    return mu, phi


def numerical_rank(mu: np.ndarray) -> int:
    """Number of eigenvalues above 1e-12 times the largest."""
    if mu.size == 0 or mu[0] <= 0.0:
        return 0
    return int(np.sum(mu > KL_RANK_TOL * mu[0]))


def build_isometry(
    cov: SubdomainCovariance, mu: np.ndarray, phi: np.ndarray, r: int
) -> AdaptationMap:
    """
    Build the orthogonal matrix A with eta = A xi.

    Row i < r is a_ij = (1/sqrt(mu_i)) sum_k w_k u_j(x_k) phi_i(x_k),
    renormalized and sign-fixed. The remaining rows are completed by
    modified Gram-Schmidt on the canonical vectors e_1, e_2, ..., skipping
    seeds that are numerically dependent.

    Args:
        cov: Subdomain covariance the eigenpairs came from
        mu: Eigenvalues from hilbert_kl
        phi: Eigenfunctions from hilbert_kl
        r: Retained dimension

    Returns:
        AdaptationMap; phi columns are flipped along with the rows of A.

    Raises:
        RankError: If r < 1 or r exceeds the numerical rank of mu
        NumericalError: If ||A A^T - I||_max > 1e-10
    """
    d = cov.d
    rank = numerical_rank(mu)
    if not 1 <= r <= rank:
        raise RankError("Retained dimension exceeds the subdomain rank", r, rank)

    projected = (phi[:, :r] * cov.weights[:, None]).T @ cov.factor
    rows = projected / np.sqrt(mu[:r])[:, None]
    rows /= np.linalg.norm(rows, axis=1)[:, None]
    signs = np.sign(rows[np.arange(r), np.argmax(np.abs(rows), axis=1)])
    rows *= signs[:, None]
    phi = phi.copy()
    phi[:, :r] *= signs[None, :]

    A = _complete_orthonormal(rows, d)
    error = float(np.max(np.abs(A @ A.T - np.eye(d))))
    if error > ISOMETRY_TOL:
        raise NumericalError(
            "Adapted basis is not orthogonal",
            {"subdomain": cov.subdomain, "error": error},
        )
    return AdaptationMap(
        subdomain=cov.subdomain, mu=mu, phi=phi, A=A, r=r, nodes=cov.nodes
    )


def constant_isometry(
    cov: SubdomainCovariance, mu: np.ndarray, phi: np.ndarray
) -> AdaptationMap:
    """
    Map with r = 0 for a subdomain whose solution has no Gaussian part.

    A is the identity; the adapted solution on such a subdomain keeps
    only its mean.
    """
    return AdaptationMap(
        subdomain=cov.subdomain, mu=mu, phi=phi, A=np.eye(cov.d), r=0, nodes=cov.nodes
    )


def _complete_orthonormal(rows: np.ndarray, d: int) -> np.ndarray:
    basis: List[np.ndarray] = [row for row in rows]
    for j in range(d):
        if len(basis) == d:
            break
        v = np.zeros(d)
        v[j] = 1.0
        for _ in range(2):
            for q in basis:
                v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm < GRAM_SCHMIDT_SKIP:
            continue
        basis.append(v / norm)
    return np.vstack(basis)


def map_nodes(amap: AdaptationMap, eta_nodes: np.ndarray) -> np.ndarray:
    """
    Map reduced germ points to the original germ: xi = A^T[:, :r] eta.

    Args:
        amap: Adaptation map
        eta_nodes: Points of shape (m, r)

    Returns:
        Points of shape (m, d) with the same Euclidean norms.
    """
    eta_nodes = np.atleast_2d(np.asarray(eta_nodes, dtype=float))
    if eta_nodes.shape[1] != amap.r:
        raise DimensionMismatchError(
            "Reduced germ does not match the retained dimension",
            amap.r,
            eta_nodes.shape[1],
        )
    return eta_nodes @ amap.A[: amap.r]


def run_adapted(
    model: RandomFieldModel,
    grid: StructuredGrid,
    bc: BcCase,
    amap: AdaptationMap,
    p: int,
    level: int,
    growth: GrowthRule = GrowthRule.LINEAR,
    workers: int = DEFAULT_WORKERS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    source: FieldLike = 0.0,
) -> PCSolution:
    """
    PC solution in the adapted variables eta_1..eta_r of one subdomain.

    Every solve covers the whole domain; the coefficients are only
    trusted on the subdomain the basis was adapted to. A map with r = 0
    gives a mean-only solution from a single solve at xi = 0.

    Returns:
        PCSolution tagged eta with dimension r and stage "adapt:D<s>".
    """
    if amap.d != model.d:
        raise DimensionMismatchError(
            "Adaptation map does not match the KL dimension", model.d, amap.d
        )
    stage = f"adapt:D{amap.subdomain}"
    if amap.r == 0:
        # Mean only: one solve at eta = () in a basis with no variables.
        basis = MultiIndexSet(d=0, p=0, indices=np.zeros((1, 0), dtype=int))
        eta_nodes, eta_weights = np.zeros((1, 0)), np.ones(1)
    else:
        sg = smolyak(amap.r, level, growth)
        basis = total_order_set(amap.r, p)
        check_exactness(sg, p, stage)
        eta_nodes, eta_weights = sg.nodes, sg.weights
    solves = eta_nodes.shape[0]

    logger.info(
        "Stage %s: %d solves (r=%d, p=%d, level %d)", stage, solves, amap.r, p, level
    )
    coeffs, seconds = collocate(
        model,
        grid,
        bc,
        map_nodes(amap, eta_nodes),
        psi_matrix(basis, eta_nodes),
        eta_weights,
        workers,
        chunk_size,
        stage,
        source,
    )
    logger.info("Stage %s finished in %.2fs", stage, seconds)
    return PCSolution(
        basis=basis,
        coeffs=coeffs,
        variable_tag=VariableTag.ETA,
        subdomain=amap.subdomain,
        adaptation=amap,
        meta={
            "stage": stage,
            "solves": solves,
            "seconds": seconds,
            "level": level,
            "smolyak_level": level + LEVEL_OFFSET,
            "subdomain": amap.subdomain,
            "r": amap.r,
        },
    )


def truncation_error_indicator(mu: Sequence[float], r: int) -> float:
    """
    Fraction of subdomain variance carried by the discarded directions.

    Example:
        >>> truncation_error_indicator([1.0, 0.0, 0.0], 1)
        0.0
    """
    mu = np.asarray(mu, dtype=float)
    total = float(np.sum(mu))
    if total <= 0.0:
        raise ValidationError("Spectrum is identically zero", {"size": mu.size})
    if r < 0:
        raise ValidationError("Retained dimension must be non-negative", {"r": r})
    return float(min(1.0, max(0.0, np.sum(mu[r:]) / total)))


def select_dimension(
    mu: Sequence[float], tolerance: float = DEFAULT_R_TOLERANCE
) -> int:
    """Smallest r >= 1 with a truncation indicator below tolerance, at most the rank."""
    mu = np.asarray(mu, dtype=float)
    rank = max(1, numerical_rank(mu))
    for r in range(1, rank + 1):
        if truncation_error_indicator(mu, r) < tolerance:
            return r
    return rank


def adapt_subdomain(
    model: RandomFieldModel,
    grid: StructuredGrid,
    bc: BcCase,
    gauss: PCSolution,
    part: SubdomainPartition,
    s: int,
    r: Optional[int],
    p: int,
    level: int,
    growth: GrowthRule = GrowthRule.LINEAR,
    r_tolerance: float = DEFAULT_R_TOLERANCE,
    workers: int = DEFAULT_WORKERS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    source: FieldLike = 0.0,
) -> PCSolution:
    """
    Adapt the basis to one subdomain and solve the reduced problem.

    Args:
        r: Retained dimension; None picks it with select_dimension

    Returns:
        Adapted PCSolution over the whole grid.
    """
    cov = subdomain_covariance(gauss, part, s, grid)
    mu, phi = hilbert_kl(cov)
    if model.is_deterministic or numerical_rank(mu) == 0:
        logger.warning("Subdomain %d has no Gaussian variability; mean only", s)
        amap = constant_isometry(cov, mu, phi)
        return run_adapted(
            model, grid, bc, amap, p, level, growth, workers, chunk_size, source
        )
    if r is None:
        r = select_dimension(mu, r_tolerance)
        logger.info("Subdomain %d: selected r=%d", s, r)
    amap = build_isometry(cov, mu, phi, r)
    logger.info(
        "Subdomain %d: r=%d, truncation indicator %.3g, isometry error %.2g",
        s,
        r,
        truncation_error_indicator(mu, r),
        amap.orthogonality_error,
    )
    return run_adapted(
        model, grid, bc, amap, p, level, growth, workers, chunk_size, source
    )


def adapt_all(
    model: RandomFieldModel,
    grid: StructuredGrid,
    bc: BcCase,
    gauss: PCSolution,
    part: SubdomainPartition,
    r: ReducedDimension,
    p: int,
    level: int,
    growth: GrowthRule = GrowthRule.LINEAR,
    r_tolerance: float = DEFAULT_R_TOLERANCE,
    workers: int = DEFAULT_WORKERS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    source: FieldLike = 0.0,
) -> Dict[int, PCSolution]:
    """
    Run adapt_subdomain for every subdomain.

    Subdomains are distributed over the thread pool and each one solves
    serially, so the result is the same for any worker count.

    Args:
        r: One dimension for all subdomains, None for automatic selection,
            or a mapping from label to either

    Returns:
        Adapted solutions keyed by label, in label order.
    """
    labels = list(range(1, part.S + 1))

    def dimension_of(s: int) -> Optional[int]:
        if isinstance(r, Mapping):
            return r.get(s)
        return r

    def job(s: int) -> PCSolution:
        return adapt_subdomain(
            model,
            grid,
            bc,
            gauss,
            part,
            s,
            dimension_of(s),
            p,
            level,
            growth,
            r_tolerance,
            1,
            chunk_size,
            source,
        )

    tic = time.perf_counter()
    if workers == 1:
        solutions = [job(s) for s in labels]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            solutions = list(executor.map(job, labels))
    logger.info(
        "Adapted %d subdomains in %.2fs", len(labels), time.perf_counter() - tic
    )
    return dict(zip(labels, solutions))


def stitch(
    solutions: Mapping[int, PCSolution], part: SubdomainPartition, grid: StructuredGrid
) -> StitchedSolution:
    """
    Assemble global mean and std fields from per-subdomain solutions.

    Each node takes its statistics from the solution of its own label.
    At nodes shared by the closed boxes of two subdomains the difference
    between the two solutions is recorded, not averaged away.

    Raises:
        ValidationError: If a subdomain has no solution
    """
    missing = [s for s in range(1, part.S + 1) if s not in solutions]
    if missing:
        raise ValidationError("Missing subdomain solutions", {"missing": missing})

    means = {s: solutions[s].mean for s in range(1, part.S + 1)}
    stds = {s: solutions[s].std for s in range(1, part.S + 1)}
    mean = np.empty(grid.n_nodes)
    std = np.empty(grid.n_nodes)
    for s in range(1, part.S + 1):
        owned = part.nodes_of(s)
        mean[owned] = means[s][owned]
        std[owned] = stds[s][owned]

    records = [
        InterfaceRecord(
            node=k,
            x1=float(grid.nodes[k, 0]),
            x2=float(grid.nodes[k, 1]),
            subdomain_a=a,
            subdomain_b=b,
            mean_mismatch=float(abs(means[a][k] - means[b][k])),
            std_mismatch=float(abs(stds[a][k] - stds[b][k])),
        )
        for k, a, b in interface_nodes(grid, part)
    ]
    return StitchedSolution(
        solutions=dict(solutions),
        labels=part.labels.copy(),
        mean=mean,
        std=std,
        interface=records,
    )


def total_cost(stages: Sequence[Union[PCSolution, StageCost]]) -> Dict[str, int]:
    """
    Deterministic solves per stage and in total.

    Example:
        >>> stages = [StageCost("coarse", 221)]
        >>> stages += [StageCost(f"adapt:D{s}", 165) for s in range(1, 9)]
        >>> total_cost(stages)["total"]
        1541
    """
    counts: Dict[str, int] = {}
    for item in stages:
        cost = item if isinstance(item, StageCost) else StageCost.from_solution(item)
        counts[cost.stage] = counts.get(cost.stage, 0) + cost.solves
    counts["total"] = sum(counts.values())
    return counts


def exact_truncation_error(
    adapted: PCSolution,
    full: PCSolution,
    nodes: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> Dict[str, float]:
    """Relative L2 error of an adapted mean and std against a full solution."""
    return {
        "mean": rel_l2_error(adapted.mean, full.mean, weights, nodes),
        "std": rel_l2_error(adapted.std, full.std, weights, nodes),
    }
