import numpy as np
import pytest

from ddadapt.exceptions import ValidationError
from ddadapt.mesh import (
    build_grid,
    interface_nodes,
    nearest_node,
    partition_snake,
    quad_weights,
    subdomain_nodes,
    subdomain_weights,
)
from ddadapt.models import Box


class TestBuildGrid:
    def test_spacing_and_corners(self, box):
        grid = build_grid(box, 97, 25)
        assert grid.n_nodes == 2425
        assert grid.h1 == pytest.approx(2.5)
        assert grid.h2 == pytest.approx(2.5)
        assert grid.x1[0] == 0.0 and grid.x1[-1] == 240.0
        assert grid.x2[0] == 0.0 and grid.x2[-1] == 60.0

    def test_row_major_ordering(self, small_grid):
        k = small_grid.index(3, 2)
        assert k == 2 * 25 + 3
        np.testing.assert_allclose(small_grid.nodes[k], [30.0, 20.0])

    @pytest.mark.parametrize("n1, n2", [(1, 5), (5, 1), (0, 0)])
    def test_rejects_too_few_nodes(self, box, n1, n2):
        with pytest.raises(ValidationError):
            build_grid(box, n1, n2)

    def test_rejects_empty_box(self):
        with pytest.raises(ValidationError):
            build_grid(Box(1.0, 1.0, 0.0, 1.0), 3, 3)


class TestQuadWeights:
    def test_sum_to_area(self, small_grid):
        w = quad_weights(small_grid)
        assert w.total == pytest.approx(14400.0)
        assert np.all(w.w > 0)

    def test_corner_and_edge_weights(self, small_grid):
        w = quad_weights(small_grid).w
        assert w[small_grid.index(0, 0)] == pytest.approx(25.0)
        assert w[small_grid.index(5, 0)] == pytest.approx(50.0)
        assert w[small_grid.index(5, 3)] == pytest.approx(100.0)


class TestPartitionSnake:
    def test_every_node_labeled(self, small_grid, small_partition):
        assert small_partition.S == 8
        assert set(np.unique(small_partition.labels)) == set(range(1, 9))
        assert sum(small_partition.sizes().values()) == small_grid.n_nodes

    @pytest.mark.parametrize(
        "point, label",
        [
            ((5.0, 5.0), 1),
            ((95.0, 5.0), 2),
            ((235.0, 5.0), 4),
            ((235.0, 55.0), 5),
            ((95.0, 55.0), 7),
            ((5.0, 55.0), 8),
        ],
    )
    def test_serpentine_numbering(self, small_grid, small_partition, point, label):
        assert small_partition.labels[nearest_node(small_grid, point)] == label
        assert small_partition.locate(point) == label

    def test_shared_nodes_take_lowest_label(self, small_grid, small_partition):
        # x1 = 60 separates D1 | D2 below and D8 | D7 above
        assert small_partition.labels[small_grid.index(6, 1)] == 1
        assert small_partition.labels[small_grid.index(6, 5)] == 7
        assert small_partition.labels[small_grid.index(6, 3)] == 1

    def test_boxes(self, small_partition):
        assert small_partition.boxes[4] == Box(180.0, 240.0, 30.0, 60.0)

    def test_locate_outside(self, small_partition):
        with pytest.raises(ValidationError) as excinfo:
            small_partition.locate((300.0, 10.0))
        assert excinfo.value.exit_code == 2

    def test_rejects_non_tiling_counts(self, small_grid):
        with pytest.raises(ValidationError):
            partition_snake(small_grid, 5, 2)
        with pytest.raises(ValidationError):
            partition_snake(small_grid, 0, 2)


class TestSubdomainNodes:
    def test_closed_box(self, small_grid, small_partition):
        nodes = subdomain_nodes(small_grid, small_partition, 1)
        assert nodes.size == 7 * 4
        xy = small_grid.nodes[nodes]
        assert xy[:, 0].min() == 0.0 and xy[:, 0].max() == 60.0
        assert xy[:, 1].min() == 0.0 and xy[:, 1].max() == 30.0

    def test_weights_match_box_area(self, small_grid, small_partition):
        for s in range(1, 9):
            w = subdomain_weights(small_grid, small_partition, s)
            assert w.shape == subdomain_nodes(small_grid, small_partition, s).shape
            assert w.sum() == pytest.approx(1800.0)

    def test_unknown_label(self, small_grid, small_partition):
        with pytest.raises(ValidationError):
            subdomain_nodes(small_grid, small_partition, 9)


class TestInterfaceNodes:
    def test_four_box_corner(self, small_grid, small_partition):
        corner = small_grid.index(6, 3)
        records = interface_nodes(small_grid, small_partition)
        pairs = [(a, b) for k, a, b in records if k == corner]
        assert sorted(pairs) == [(1, 2), (1, 7), (1, 8), (2, 7), (2, 8), (7, 8)]

    def test_interior_nodes_excluded(self, small_grid, small_partition):
        nodes = {k for k, _, _ in interface_nodes(small_grid, small_partition)}
        assert small_grid.index(2, 1) not in nodes
        assert small_grid.index(0, 3) in nodes


class TestNearestNode:
    def test_rounds_to_closest(self, small_grid):
        assert nearest_node(small_grid, (21.0, 14.0)) == small_grid.index(2, 1)
        assert nearest_node(small_grid, (240.0, 60.0)) == small_grid.n_nodes - 1

    def test_outside(self, small_grid):
        with pytest.raises(ValidationError):
            nearest_node(small_grid, (-1.0, 10.0))
