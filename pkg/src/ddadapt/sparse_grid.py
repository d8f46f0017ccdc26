"""
Smolyak sparse quadrature for the standard Gaussian measure.

The grid is built with the combination technique over non-nested
probabilists' Gauss-Hermite rules. Tensor rules that share a node are
merged and their weights summed, so the node count equals the number of
distinct points used by the deterministic solver.
"""

import logging
import math
from functools import lru_cache
from itertools import product
from typing import List, Set, Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from ddadapt.chaos import multi_indices
from ddadapt.constants import NODE_MERGE_TOL, GrowthRule
from ddadapt.exceptions import ValidationError
from ddadapt.models import SparseGrid

logger = logging.getLogger(__name__)

_MERGE_DECIMALS = int(round(-math.log10(NODE_MERGE_TOL)))


@lru_cache(maxsize=None)
def gauss_hermite_1d(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Probabilists' Gauss-Hermite rule normalized to the standard normal density.

    The rule is symmetrized so that mirrored nodes carry identical weights
    and the middle node of an odd rule is exactly zero.

    Args:
        n: Number of points, at least 1

    Returns:
        (nodes, weights) as read-only arrays; weights sum to 1.

    Example:
        >>> gauss_hermite_1d(2)
        (array([-1.,  1.]), array([0.5, 0.5]))
    """
    if n < 1:
        raise ValidationError("Gauss-Hermite rule needs at least one point", {"n": n})
    x, w = hermegauss(n)
    w = w / np.sqrt(2.0 * np.pi)
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x[np.abs(x) < NODE_MERGE_TOL] = 0.0
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def smolyak(d: int, level: int, growth: GrowthRule = GrowthRule.LINEAR) -> SparseGrid:
    """
    Build the Smolyak sparse grid of a given 0-based level.

    A(L, d) = sum over L-d+1 <= |l| <= L of
    (-1)^(L-|l|) C(d-1, L-|l|) U^{l_1} x ... x U^{l_d},
    where U^l is the Gauss-Hermite rule with growth.points(l) nodes.

    Args:
        d: Dimension, at least 1
        level: 0-based level, at least 0
        growth: 1D point growth

    Returns:
        SparseGrid with unique nodes in lexicographic order and weights
        summing to one; exact for total degree sg.exactness.

    Example:
        >>> smolyak(10, 2).size
        221
    """
    _check_args(d, level)

    point_blocks: List[np.ndarray] = []
    weight_blocks: List[np.ndarray] = []
    for total in range(max(0, level - d + 1), level + 1):
        coefficient = (-1) ** (level - total) * math.comb(d - 1, level - total)
        for levels in multi_indices(total, d):
            rules = [gauss_hermite_1d(growth.points(l)) for l in levels]
            point_blocks.append(np.array(list(product(*(x for x, _ in rules)))))
            weights = np.prod(np.array(list(product(*(w for _, w in rules)))), axis=1)
            weight_blocks.append(coefficient * weights)

    points = np.vstack(point_blocks)
    weights = np.concatenate(weight_blocks)
    keys = np.round(points, _MERGE_DECIMALS) + 0.0
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    merged = np.bincount(inverse, weights=weights, minlength=first.shape[0])

    logger.debug(
        "Smolyak d=%d level=%d (%s): %d tensor points merged into %d nodes",
        d,
        level,
        growth.value,
        points.shape[0],
        first.shape[0],
    )
    return SparseGrid(
        d=d, level=level, nodes=points[first], weights=merged, growth=growth
    )


def node_count(d: int, level: int, growth: GrowthRule = GrowthRule.LINEAR) -> int:
    """
    Count the nodes of smolyak(d, level) without building the grid.

    A candidate point is described by which of its coordinates are zero
    and, for the non-zero ones, by the single rule level each coordinate
    belongs to (distinct Gauss-Hermite rules share no non-zero node). The
    point is a grid node when zero coordinates can be placed on levels
    whose rules contain zero so that the level sum lands in the Smolyak
    band [L-d+1, L]. Non-zero counts per level sum come from a polynomial
    power computed by integer convolution.

    Example:
        >>> node_count(10, 4)
        8761
    """
    _check_args(d, level)
    lowest = max(0, level - d + 1)

    nonzero = np.array(
        [growth.points(l) - growth.points(l) % 2 for l in range(level + 1)],
        dtype=np.int64,
    )
    zero_levels = [l for l in range(level + 1) if growth.points(l) % 2]

    # Level sums reachable by k coordinates that are all zero
    reachable: List[Set[int]] = [{0}]
    for _ in range(d):
        reachable.append(
            {s + l for s in reachable[-1] for l in zero_levels if s + l <= level}
        )

    count = 0
    power = np.zeros(level + 1, dtype=np.int64)
    power[0] = 1
    for m in range(d + 1):
        zeros = reachable[d - m]
        for t in range(level + 1):
            if power[t] and any(lowest <= t + s <= level for s in zeros):
                count += math.comb(d, m) * int(power[t])
        power = np.convolve(power, nonzero)[: level + 1]
    return count


def level_for_order(p: int) -> int:
    """Smallest 0-based level whose exactness covers products of two order-p terms."""
    return max(0, p)


def _check_args(d: int, level: int) -> None:
    if d < 1 or level < 0:
        raise ValidationError(
            "Sparse grid needs d >= 1 and level >= 0", {"d": d, "level": level}
        )
