"""
Structured grids, trapezoid weights, and the subdomain partition.

The grid is a plain tensor grid over a rectangle. Spatial integrals use
trapezoid weights, which for a vertex-centred scheme are also the areas
of the dual cells.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from ddadapt.exceptions import ValidationError
from ddadapt.models import Box, QuadratureWeights, StructuredGrid, SubdomainPartition

logger = logging.getLogger(__name__)


def build_grid(box: Box, n1: int, n2: int) -> StructuredGrid:
    """
    Build an n1 x n2 tensor grid over a box.

    Args:
        box: Rectangle to cover; corners become grid nodes exactly
        n1: Node count along x1, at least 2
        n2: Node count along x2, at least 2

    Returns:
        StructuredGrid with row-major node ordering.

    Raises:
        ValidationError: If an extent is not positive or a count is below 2

    Example:
        >>> grid = build_grid(Box(0.0, 240.0, 0.0, 60.0), 49, 13)
        >>> grid.n_nodes, grid.h1, grid.h2
        (637, 5.0, 5.0)
    """
    if not (box.x1_max > box.x1_min and box.x2_max > box.x2_min):
        raise ValidationError("Grid box must have positive extents", box.to_dict())
    if int(n1) != n1 or int(n2) != n2 or n1 < 2 or n2 < 2:
        raise ValidationError(
            "Grid needs at least 2 nodes per axis", {"n1": n1, "n2": n2}
        )
    return StructuredGrid(box=box, n1=int(n1), n2=int(n2))


def quad_weights(grid: StructuredGrid) -> QuadratureWeights:
    """Trapezoid weights on the grid; they sum to the box area."""
    return QuadratureWeights(w=_trapezoid_weights(grid.n1, grid.h1, grid.n2, grid.h2))


def _trapezoid_weights(n1: int, h1: float, n2: int, h2: float) -> np.ndarray:
    w1 = np.full(n1, h1)
    w1[[0, -1]] *= 0.5
    w2 = np.full(n2, h2)
    w2[[0, -1]] *= 0.5
    return np.outer(w2, w1).ravel()


def partition_snake(grid: StructuredGrid, nx: int, ny: int) -> SubdomainPartition:
    """
    Split the grid into nx x ny equal boxes numbered in serpentine order.

    Row 0 (bottom) is numbered left to right, row 1 right to left, and so
    on, so that for nx=4, ny=2 the bottom row holds D1..D4 and the top
    row holds D5..D8 from right to left. Nodes on a shared edge get the
    lowest label among the boxes that contain them.

    Args:
        grid: Grid to partition
        nx: Number of subdomain columns
        ny: Number of subdomain rows

    Returns:
        SubdomainPartition with labels 1..nx*ny.

    Raises:
        ValidationError: If the box edges would not fall on grid lines
    """
    if nx < 1 or ny < 1:
        raise ValidationError("Partition counts must be positive", {"nx": nx, "ny": ny})
    if (grid.n1 - 1) % nx or (grid.n2 - 1) % ny:
        raise ValidationError(
            "Partition does not tile the grid",
            {"n1": grid.n1, "n2": grid.n2, "nx": nx, "ny": ny},
        )

    step1 = (grid.n1 - 1) // nx
    step2 = (grid.n2 - 1) // ny
    ii, jj = np.meshgrid(np.arange(grid.n1), np.arange(grid.n2))
    ii = ii.ravel()
    jj = jj.ravel()

    boxes: List[Box] = []
    cells: List[Tuple[int, int]] = []
    for row in range(ny):
        columns = range(nx) if row % 2 == 0 else range(nx - 1, -1, -1)
        for col in columns:
            cells.append((col, row))
            boxes.append(
                Box(
                    float(grid.x1[col * step1]),
                    float(grid.x1[(col + 1) * step1]),
                    float(grid.x2[row * step2]),
                    float(grid.x2[(row + 1) * step2]),
                )
            )

    labels = np.zeros(grid.n_nodes, dtype=int)
    for s, (col, row) in enumerate(cells, start=1):
        inside = (
            (ii >= col * step1)
            & (ii <= (col + 1) * step1)
            & (jj >= row * step2)
            & (jj <= (row + 1) * step2)
            & (labels == 0)
        )
        labels[inside] = s

    logger.debug("Partitioned %d nodes into %d subdomains", grid.n_nodes, len(boxes))
    return SubdomainPartition(nx=nx, ny=ny, labels=labels, boxes=tuple(boxes))


def subdomain_nodes(
    grid: StructuredGrid, part: SubdomainPartition, s: int
) -> np.ndarray:
    """Grid indices of every node in the closed box of subdomain s."""
    i_lo, i_hi, j_lo, j_hi = _box_index_range(grid, part, s)
    cols = np.arange(i_lo, i_hi + 1)
    rows = np.arange(j_lo, j_hi + 1)
    return (rows[:, None] * grid.n1 + cols[None, :]).ravel()


def subdomain_weights(
    grid: StructuredGrid, part: SubdomainPartition, s: int
) -> np.ndarray:
    """Trapezoid weights of the closed subdomain sub-grid, in subdomain_nodes order."""
    i_lo, i_hi, j_lo, j_hi = _box_index_range(grid, part, s)
    return _trapezoid_weights(i_hi - i_lo + 1, grid.h1, j_hi - j_lo + 1, grid.h2)


def _box_index_range(
    grid: StructuredGrid, part: SubdomainPartition, s: int
) -> Tuple[int, int, int, int]:
    if not 1 <= s <= part.S:
        raise ValidationError("Unknown subdomain", {"subdomain": s, "S": part.S})
    box = part.boxes[s - 1]
    i_lo = int(round((box.x1_min - grid.box.x1_min) / grid.h1))
    i_hi = int(round((box.x1_max - grid.box.x1_min) / grid.h1))
    j_lo = int(round((box.x2_min - grid.box.x2_min) / grid.h2))
    j_hi = int(round((box.x2_max - grid.box.x2_min) / grid.h2))
    return i_lo, i_hi, j_lo, j_hi


def interface_nodes(
    grid: StructuredGrid, part: SubdomainPartition
) -> List[Tuple[int, int, int]]:
    """
    Nodes shared by two or more closed subdomain boxes.

    Returns:
        (node, s_a, s_b) for every pair s_a < s_b of boxes meeting at the
        node; a corner shared by four boxes yields six pairs.
    """
    members: List[List[int]] = [[] for _ in range(grid.n_nodes)]
    for s in range(1, part.S + 1):
        for k in subdomain_nodes(grid, part, s):
            members[k].append(s)
    pairs = []
    for k, owners in enumerate(members):
        for a_pos in range(len(owners)):
            for b_pos in range(a_pos + 1, len(owners)):
                pairs.append((k, owners[a_pos], owners[b_pos]))
    return pairs


def nearest_node(grid: StructuredGrid, point: Sequence[float]) -> int:
    """
    Index of the grid node closest to a point inside the box.

    Raises:
        ValidationError: If the point lies outside the grid box
    """
    if not grid.box.contains(point):
        raise ValidationError("Point lies outside the domain", {"point": tuple(point)})
    i = int(round((point[0] - grid.box.x1_min) / grid.h1))
    j = int(round((point[1] - grid.box.x2_min) / grid.h2))
    return grid.index(min(max(i, 0), grid.n1 - 1), min(max(j, 0), grid.n2 - 1))
