"""
Deterministic steady diffusion -div(a grad u) = f on a structured grid.

Vertex-centred finite volumes: each node owns the dual cell of its
trapezoid weight, face coefficients are harmonic means of the nodal
values of a, and the integrated operator is divided by h1 * h2 so that
interior rows read as the textbook 5-point stencil. Horizontal walls
without Dirichlet data are zero-flux walls and need no extra rows.
"""

import logging
from typing import Dict, Union

import numpy as np
import scipy.sparse
from scipy.sparse.linalg import spsolve

from ddadapt.constants import SOLVER_RTOL
from ddadapt.exceptions import DimensionMismatchError, SingularSystemError, SolverError
from ddadapt.exceptions import ValidationError
from ddadapt.mesh import quad_weights
from ddadapt.models import BcCase, DeterministicSolution, LinearSystem, StructuredGrid

logger = logging.getLogger(__name__)

FieldLike = Union[float, np.ndarray]


def assemble(
    grid: StructuredGrid,
    a_field: np.ndarray,
    bc: BcCase,
    f_field: FieldLike = 0.0,
) -> LinearSystem:
    """
    Assemble the finite-volume system for one coefficient realization.

    Args:
        grid: Structured grid
        a_field: Diffusion coefficient per node, strictly positive
        bc: Boundary data; left/right values win at the corners
        f_field: Source term, scalar or per node

    Returns:
        LinearSystem with Dirichlet nodes eliminated. The reduced matrix
        is symmetric positive definite.

    Raises:
        ValidationError: If a_field has a non-positive or non-finite entry
        DimensionMismatchError: If a field does not have one value per node
        SingularSystemError: If no node carries Dirichlet data

    Example:
        >>> grid = build_grid(Box(0.0, 2.0, 0.0, 2.0), 3, 3)
        >>> system = assemble(grid, np.ones(9), BcCase.constant(1.0))
        >>> system.matrix.toarray()
        array([[4.]])
    """
    n = grid.n_nodes
    a = np.asarray(a_field, dtype=float)
    if a.shape != (n,):
        raise DimensionMismatchError(
            "Coefficient field needs one value per node", n, a.size
        )
    if not np.all(np.isfinite(a)) or np.any(a <= 0.0):
        bad = int(np.flatnonzero(~(np.isfinite(a) & (a > 0.0)))[0])
        raise ValidationError(
            "Diffusion coefficient must be positive",
            {"node": bad, "value": float(a[bad])},
        )
    f = np.broadcast_to(np.asarray(f_field, dtype=float), (n,))

    n1, n2, h1, h2 = grid.n1, grid.n2, grid.h1, grid.h2
    cell = h1 * h2
    a2 = a.reshape(n2, n1)
    index = np.arange(n).reshape(n2, n1)

    # Faces between horizontal neighbours; half length on the bottom and top rows
    face_x = _harmonic(a2[:, :-1], a2[:, 1:])
    length_x = np.full(n2, h2)
    length_x[[0, -1]] *= 0.5
    trans_x = face_x * length_x[:, None] / h1 / cell

    # Faces between vertical neighbours; half length on the end columns
    face_y = _harmonic(a2[:-1, :], a2[1:, :])
    length_y = np.full(n1, h1)
    length_y[[0, -1]] *= 0.5
    trans_y = face_y * length_y[None, :] / h2 / cell

    tail = np.concatenate([index[:, :-1].ravel(), index[:-1, :].ravel()])
    head = np.concatenate([index[:, 1:].ravel(), index[1:, :].ravel()])
    trans = np.concatenate([trans_x.ravel(), trans_y.ravel()])
    diagonal = np.bincount(tail, trans, minlength=n)
    diagonal += np.bincount(head, trans, minlength=n)

    full = scipy.sparse.coo_matrix(
        (
            np.concatenate([diagonal, -trans, -trans]),
            (
                np.concatenate([np.arange(n), tail, head]),
                np.concatenate([np.arange(n), head, tail]),
            ),
        ),
        shape=(n, n),
    ).tocsr()
    full_rhs = f * quad_weights(grid).w / cell

    values = np.full(n, np.nan)
    sides: Dict[str, np.ndarray] = {}
    if bc.bottom is not None:
        sides["bottom"] = index[0, 1:-1]
        values[index[0, :]] = bc.bottom
    if bc.top is not None:
        sides["top"] = index[-1, 1:-1]
        values[index[-1, :]] = bc.top
    if bc.left is not None:
        sides["left"] = index[:, 0]
        values[index[:, 0]] = bc.left
    if bc.right is not None:
        sides["right"] = index[:, -1]
        values[index[:, -1]] = bc.right

    fixed = ~np.isnan(values)
    dirichlet = np.flatnonzero(fixed)
    if dirichlet.size == 0:
        raise SingularSystemError(context={"variant": str(bc.variant)})
    free = np.flatnonzero(~fixed)

    free_rows = full[free]
    matrix = free_rows[:, free].tocsr()
    rhs = full_rhs[free] - free_rows[:, dirichlet] @ values[dirichlet]

    return LinearSystem(
        matrix=matrix,
        rhs=rhs,
        free=free,
        dirichlet=dirichlet,
        dirichlet_values=values[dirichlet],
        full_matrix=full,
        full_rhs=full_rhs,
        sides=sides,
        cell_area=cell,
    )


def _harmonic(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    return 2.0 * left * right / (left + right)


def solve(system: LinearSystem) -> DeterministicSolution:
    """
    Solve an assembled system with a sparse direct factorization.

    Raises:
        SolverError: If the result is not finite or the relative residual
            ||Au - b|| / ||b|| exceeds 1e-10
    """
    u = np.empty(system.n_nodes)
    u[system.dirichlet] = system.dirichlet_values
    if system.free.size == 0:
        return DeterministicSolution(values=u, residual=0.0)

    x = np.asarray(spsolve(system.matrix.tocsc(), system.rhs), dtype=float)
    if not np.all(np.isfinite(x)):
        raise SolverError("Sparse factorization produced non-finite values")

    b_norm = float(np.linalg.norm(system.rhs))
    r_norm = float(np.linalg.norm(system.matrix @ x - system.rhs))
    residual = r_norm / b_norm if b_norm > 0.0 else r_norm
    if residual > SOLVER_RTOL:
        raise SolverError("Relative residual above tolerance", residual)

    u[system.free] = x
    return DeterministicSolution(values=u, residual=residual)


def solve_realization(
    grid: StructuredGrid,
    a_field: np.ndarray,
    bc: BcCase,
    f_field: FieldLike = 0.0,
) -> np.ndarray:
    """assemble + solve, returning the nodal values only."""
    return solve(assemble(grid, a_field, bc, f_field)).values


def boundary_fluxes(system: LinearSystem, u: np.ndarray) -> Dict[str, float]:
    """
    Net flow into the domain across each Dirichlet side.

    The flow through a side is the residual of the full operator on its
    dual cells, rescaled to an integral. With f = 0 the values sum to zero.

    Returns:
        Mapping from side name (left, right, bottom, top) to flow.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (system.n_nodes,):
        raise DimensionMismatchError(
            "Solution needs one value per node", system.n_nodes, u.size
        )
    residual = system.full_matrix @ u - system.full_rhs
    return {
        name: float(np.sum(residual[nodes]) * system.cell_area)
        for name, nodes in system.sides.items()
    }
