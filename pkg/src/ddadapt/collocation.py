"""
Non-intrusive stochastic collocation.

Deterministic solves run at quadrature nodes in the germ space and the
PC coefficients are obtained by projection,
u_i(x) = sum_q u(x, xi_q) psi_i(xi_q) w_q. Solves are grouped in chunks
that may run on a thread pool; chunks are reduced in node order, so the
coefficients do not depend on the worker count.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, Iterator, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ddadapt.chaos import psi_matrix, total_order_set
from ddadapt.constants import DEFAULT_CHUNK_SIZE, DEFAULT_WORKERS, LEVEL_OFFSET
from ddadapt.constants import GrowthRule
from ddadapt.diffusion_solver import FieldLike, solve_realization
from ddadapt.exceptions import CollocationError, DDAdaptError, DimensionMismatchError
from ddadapt.exceptions import ValidationError
from ddadapt.mesh import build_grid
from ddadapt.models import BcCase, MultiIndexSet, PCSolution, RandomFieldModel
from ddadapt.models import SparseGrid, StructuredGrid
from ddadapt.random_field import realize_a
from ddadapt.sparse_grid import smolyak

logger = logging.getLogger(__name__)


def solve_at(
    model: RandomFieldModel,
    grid: StructuredGrid,
    bc: BcCase,
    xi_nodes: np.ndarray,
    workers: int = DEFAULT_WORKERS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    stage: str = "collocation",
    source: FieldLike = 0.0,
) -> Iterator[Tuple[int, np.ndarray]]:
    """
    Solve the diffusion problem at every germ point, chunk by chunk.

    Args:
        model: KL model of the log-coefficient
        grid: Grid the model lives on
        bc: Boundary data
        xi_nodes: Germ points, shape (Q, model.d)
        workers: Thread count; 1 solves in the calling thread
        chunk_size: Points per task
        stage: Label attached to failures
        source: Source term f

    Yields:
        (start, U) with U of shape (chunk, n_nodes), in increasing start order.

    Raises:
        CollocationError: With the index of the first point whose solve failed
    """
    xi_nodes = np.atleast_2d(np.asarray(xi_nodes, dtype=float))
    if xi_nodes.shape[1] != model.d:
        raise DimensionMismatchError(
            "Germ points do not match the KL dimension", model.d, xi_nodes.shape[1]
        )
    if chunk_size < 1 or workers < 1:
        raise ValidationError(
            "Worker count and chunk size must be positive",
            {"workers": workers, "chunk_size": chunk_size},
        )

    def solve_chunk(start: int) -> Tuple[int, np.ndarray]:
        block = xi_nodes[start : start + chunk_size]
        out = np.empty((block.shape[0], grid.n_nodes))
        for offset, xi in enumerate(block):
            try:
                out[offset] = solve_realization(grid, realize_a(model, xi), bc, source)
            except (DDAdaptError, ArithmeticError, np.linalg.LinAlgError) as e:
                raise CollocationError(
                    f"Deterministic solve failed: {e}",
                    node_index=start + offset,
                    stage=stage,
                ) from e
        logger.debug(
            "%s: solved points %d..%d", stage, start, start + block.shape[0] - 1
        )
        return start, out

    starts = range(0, xi_nodes.shape[0], chunk_size)
    if workers == 1:
        for start in starts:
            yield solve_chunk(start)
        return
    with ThreadPoolExecutor(max_workers=workers) as executor:
        yield from executor.map(solve_chunk, starts)


def collocate(
    model: RandomFieldModel,
    grid: StructuredGrid,
    bc: BcCase,
    xi_nodes: np.ndarray,
    psi: np.ndarray,
    weights: np.ndarray,
    workers: int = DEFAULT_WORKERS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    stage: str = "collocation",
    source: FieldLike = 0.0,
) -> Tuple[np.ndarray, float]:
    """
    Project deterministic solves onto a basis by quadrature.

    Args:
        xi_nodes: Germ points handed to the solver, shape (Q, model.d)
        psi: Basis values at the quadrature nodes, shape (Q, N)
        weights: Quadrature weights, shape (Q,)

    Returns:
        (coefficients of shape (n_nodes, N), wall seconds)
    """
    tic = time.perf_counter()
    coeffs = np.zeros((grid.n_nodes, psi.shape[1]))
    blocks = solve_at(model, grid, bc, xi_nodes, workers, chunk_size, stage, source)
    for start, block in blocks:
        stop = start + block.shape[0]
        coeffs += block.T @ (psi[start:stop] * weights[start:stop, None])
    return coeffs, time.perf_counter() - tic


def run_full(
    model: RandomFieldModel,
    grid: StructuredGrid,
    bc: BcCase,
    basis: MultiIndexSet,
    sg: SparseGrid,
    workers: int = DEFAULT_WORKERS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    source: FieldLike = 0.0,
    stage: str = "full",
) -> PCSolution:
    """
    Full-dimensional PC solution in the original germ xi.

    Args:
        model: KL model with d germ variables
        grid: Spatial grid
        bc: Boundary data
        basis: Total-order basis in d variables
        sg: Sparse grid in d variables
        workers: Thread count for the solves
        chunk_size: Solves per task
        source: Source term f
        stage: Name recorded in the cost metadata

    Returns:
        PCSolution tagged xi; meta holds stage, solves, seconds and level.

    Raises:
        DimensionMismatchError: If basis, grid and model disagree on d
        CollocationError: If a deterministic solve fails

    Example:
        >>> basis, sg = total_order_set(10, 3), smolyak(10, 4)
        >>> sol = run_full(model, grid, BcCase.mixed(), basis, sg)
        >>> sol.solves
        8761
    """
    if not basis.d == sg.d == model.d:
        raise DimensionMismatchError(
            "Basis, sparse grid and model disagree on the dimension", model.d, basis.d
        )
    check_exactness(sg, basis.p, stage)

    logger.info(
        "Stage %s: %d solves (d=%d, p=%d, level %d)",
        stage,
        sg.size,
        sg.d,
        basis.p,
        sg.level,
    )
    psi = psi_matrix(basis, sg.nodes)
    coeffs, seconds = collocate(
        model, grid, bc, sg.nodes, psi, sg.weights, workers, chunk_size, stage, source
    )
    logger.info("Stage %s finished in %.2fs", stage, seconds)
    return PCSolution(basis=basis, coeffs=coeffs, meta=_meta(stage, sg, seconds))


def gaussian_part(sol: PCSolution) -> PCSolution:
    """Keep the mean and the d linear terms of a solution."""
    if sol.basis.p < 1:
        raise ValidationError("Solution has no linear terms", {"p": sol.basis.p})
    keep = sol.dimension + 1
    basis = MultiIndexSet(d=sol.dimension, p=1, indices=sol.basis.indices[:keep].copy())
    return PCSolution(
        basis=basis,
        coeffs=sol.coeffs[:, :keep].copy(),
        variable_tag=sol.variable_tag,
        subdomain=sol.subdomain,
        adaptation=sol.adaptation,
        meta=dict(sol.meta),
    )


def run_coarse_gaussian(
    model: RandomFieldModel,
    grid: StructuredGrid,
    bc: BcCase,
    level_coarse: int,
    growth: GrowthRule = GrowthRule.LINEAR,
    workers: int = DEFAULT_WORKERS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    source: FieldLike = 0.0,
    spatial_factor: int = 1,
) -> PCSolution:
    """
    First-order PC solution from a low-level sparse grid.

    With spatial_factor > 1 the solves run on a grid coarsened by that
    factor along both axes and every coefficient is interpolated back to
    the working grid bilinearly.

    Returns:
        PCSolution with p = 1, stage "coarse".
    """
    sg = smolyak(model.d, level_coarse, growth)
    basis = total_order_set(model.d, 1)
    check_exactness(sg, 1, "coarse")
    psi = psi_matrix(basis, sg.nodes)

    logger.info(
        "Stage coarse: %d solves (d=%d, level %d, spatial factor %d)",
        sg.size,
        model.d,
        level_coarse,
        spatial_factor,
    )
    if spatial_factor == 1:
        coeffs, seconds = collocate(
            model,
            grid,
            bc,
            sg.nodes,
            psi,
            sg.weights,
            workers,
            chunk_size,
            "coarse",
            source,
        )
    else:
        coarse, coarse_model, coarse_source = _coarsen(
            grid, model, source, spatial_factor
        )
        coarse_coeffs, seconds = collocate(
            coarse_model,
            coarse,
            bc,
            sg.nodes,
            psi,
            sg.weights,
            workers,
            chunk_size,
            "coarse",
            coarse_source,
        )
        coeffs = _interpolate(coarse, grid, coarse_coeffs)

    logger.info("Stage coarse finished in %.2fs", seconds)
    meta = _meta("coarse", sg, seconds)
    meta["spatial_factor"] = spatial_factor
    return PCSolution(basis=basis, coeffs=coeffs, meta=meta)


def _coarsen(
    grid: StructuredGrid, model: RandomFieldModel, source: FieldLike, factor: int
) -> Tuple[StructuredGrid, RandomFieldModel, FieldLike]:
    if factor < 1 or (grid.n1 - 1) % factor or (grid.n2 - 1) % factor:
        raise ValidationError(
            "Spatial factor must divide the grid intervals",
            {"factor": factor, "n1": grid.n1, "n2": grid.n2},
        )
    coarse = build_grid(
        grid.box, (grid.n1 - 1) // factor + 1, (grid.n2 - 1) // factor + 1
    )
    rows = np.arange(0, grid.n2, factor)[:, None] * grid.n1
    subset = (rows + np.arange(0, grid.n1, factor)[None, :]).ravel()
    coarse_model = RandomFieldModel(
        g0=model.g0[subset],
        lambdas=model.lambdas,
        modes=model.modes[subset],
        captured_variance=model.captured_variance,
    )
    if np.ndim(source):
        source = np.asarray(source, dtype=float)[subset]
    return coarse, coarse_model, source


def _interpolate(
    coarse: StructuredGrid, fine: StructuredGrid, coeffs: np.ndarray
) -> np.ndarray:
    table = coeffs.reshape(coarse.n2, coarse.n1, -1)
    interpolator = RegularGridInterpolator((coarse.x2, coarse.x1), table)
    return interpolator(fine.nodes[:, ::-1])


def check_exactness(sg: SparseGrid, p: int, stage: str) -> None:
    if sg.exactness < 2 * p:
        logger.warning(
            "Stage %s: sparse grid exact to degree %d, order-%d projection needs %d",
            stage,
            sg.exactness,
            p,
            2 * p,
        )


def _meta(
    stage: str, sg: SparseGrid, seconds: float, **extra: Optional[Any]
) -> Dict[str, Any]:
    meta: Dict[str, Any] = {
        "stage": stage,
        "solves": sg.size,
        "seconds": seconds,
        "level": sg.level,
        "smolyak_level": sg.level + LEVEL_OFFSET,
    }
    meta.update(extra)
    return meta
