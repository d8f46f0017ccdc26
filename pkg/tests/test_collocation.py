import logging
import math

import numpy as np
import pytest

from ddadapt.chaos import moments, psi_matrix, total_order_set
from ddadapt.collocation import gaussian_part, run_coarse_gaussian, run_full, solve_at
from ddadapt.diffusion_solver import solve_realization
from ddadapt.exceptions import (
    CollocationError,
    DimensionMismatchError,
    ValidationError,
)
from ddadapt.models import BcCase, PCSolution
from ddadapt.random_field import deterministic_model
from ddadapt.sparse_grid import smolyak


@pytest.fixture
def full_solution(small_model, small_grid, mixed):
    return run_full(
        small_model, small_grid, mixed, total_order_set(3, 2), smolyak(3, 2)
    )


class TestRunFull:
    def test_shape_and_meta(self, full_solution):
        assert full_solution.coeffs.shape == (175, 10)
        assert full_solution.solves == smolyak(3, 2).size
        assert full_solution.stage == "full"
        assert full_solution.meta["smolyak_level"] == 3

    def test_mean_within_boundary_values(self, full_solution):
        mean, std = moments(full_solution)
        assert mean.min() >= 10.0 - 1e-8
        assert mean.max() <= 100.0 + 1e-8
        assert np.all(std >= 0)

    def test_dirichlet_nodes_have_no_spread(self, full_solution, small_grid):
        left = [small_grid.index(0, j) for j in range(small_grid.n2)]
        np.testing.assert_allclose(full_solution.mean[left], 100.0)
        np.testing.assert_allclose(full_solution.std[left], 0.0, atol=1e-9)

    def test_deterministic_model(self, small_grid, mixed):
        model = deterministic_model(small_grid, math.log(5.0), 3)
        sol = run_full(model, small_grid, mixed, total_order_set(3, 2), smolyak(3, 2))
        a = np.full(small_grid.n_nodes, 5.0)
        expected = solve_realization(small_grid, a, mixed)
        np.testing.assert_allclose(sol.mean, expected, atol=1e-9)
        np.testing.assert_allclose(sol.std, 0.0, atol=1e-9)

    def test_worker_count_does_not_change_result(
        self, small_model, small_grid, mixed
    ):
        basis, sg = total_order_set(3, 2), smolyak(3, 2)
        serial = run_full(small_model, small_grid, mixed, basis, sg, 1, chunk_size=4)
        pooled = run_full(small_model, small_grid, mixed, basis, sg, 3, chunk_size=4)
        np.testing.assert_array_equal(serial.coeffs, pooled.coeffs)

    def test_dimension_mismatch(self, small_model, small_grid, mixed):
        basis, sg = total_order_set(4, 2), smolyak(4, 2)
        with pytest.raises(DimensionMismatchError):
            run_full(small_model, small_grid, mixed, basis, sg)

    def test_low_level_warns(self, small_model, small_grid, mixed, caplog):
        basis, sg = total_order_set(3, 2), smolyak(3, 1)
        with caplog.at_level(logging.WARNING, logger="ddadapt.collocation"):
            run_full(small_model, small_grid, mixed, basis, sg)
        assert "exact to degree 3" in caplog.text

    @pytest.mark.parametrize("k", range(10))
    def test_recovers_a_single_basis_term(
        self, small_model, small_grid, mixed, monkeypatch, k
    ):
        basis = total_order_set(3, 2)

        def fake_solve_at(model, grid, bc, xi_nodes, *args):
            values = psi_matrix(basis, xi_nodes)[:, k]
            yield 0, np.tile(values[:, None], (1, grid.n_nodes))

        monkeypatch.setattr("ddadapt.collocation.solve_at", fake_solve_at)
        sol = run_full(small_model, small_grid, mixed, basis, smolyak(3, 2))
        expected = np.zeros((small_grid.n_nodes, basis.size))
        expected[:, k] = 1.0
        np.testing.assert_allclose(sol.coeffs, expected, atol=1e-8)


class TestSolveAt:
    def test_chunks_in_order(self, small_model, small_grid, mixed, rng):
        xi = rng.standard_normal((7, 3))
        blocks = solve_at(small_model, small_grid, mixed, xi, 2, 3)
        starts = [start for start, _ in blocks]
        assert starts == [0, 3, 6]

    def test_failure_reports_point(self, small_model, small_grid, mixed):
        xi = np.array([[0.0, 0.0, 0.0], [1e6, -1e6, 1e6]])
        with np.errstate(over="ignore"):
            with pytest.raises(CollocationError) as info:
                list(solve_at(small_model, small_grid, mixed, xi, stage="sweep"))
        assert info.value.node_index == 1
        assert info.value.stage == "sweep"

    def test_rejects_bad_settings(self, small_model, small_grid, mixed):
        xi = np.zeros((2, 3))
        with pytest.raises(ValidationError):
            list(solve_at(small_model, small_grid, mixed, xi, workers=0))
        with pytest.raises(DimensionMismatchError):
            list(solve_at(small_model, small_grid, mixed, np.zeros((2, 2))))


class TestCoarseGaussian:
    def test_first_order(self, small_model, small_grid, mixed):
        sol = run_coarse_gaussian(small_model, small_grid, mixed, 1)
        assert sol.basis.p == 1
        assert sol.coeffs.shape == (175, 4)
        assert sol.stage == "coarse"
        assert sol.meta["spatial_factor"] == 1

    def test_spatial_coarsening(self, small_model, small_grid, mixed):
        sol = run_coarse_gaussian(
            small_model, small_grid, mixed, 1, spatial_factor=2
        )
        assert sol.coeffs.shape == (175, 4)
        left = [small_grid.index(0, j) for j in range(small_grid.n2)]
        np.testing.assert_allclose(sol.coeffs[left, 0], 100.0)
        np.testing.assert_allclose(sol.coeffs[left, 1:], 0.0, atol=1e-9)

    def test_spatial_factor_must_divide(self, small_model, small_grid, mixed):
        with pytest.raises(ValidationError):
            run_coarse_gaussian(small_model, small_grid, mixed, 1, spatial_factor=5)

    def test_gaussian_part_of_full(self, full_solution):
        part = gaussian_part(full_solution)
        assert part.basis.size == 4
        np.testing.assert_array_equal(part.coeffs, full_solution.coeffs[:, :4])

    def test_linear_terms_match_full(self, full_solution, small_model, small_grid):
        coarse = run_coarse_gaussian(small_model, small_grid, BcCase.mixed(), 1)
        reference = gaussian_part(full_solution).coeffs[:, 1:]
        gap = np.linalg.norm(coarse.coeffs[:, 1:] - reference)
        assert gap <= 0.05 * np.linalg.norm(reference)

    def test_gaussian_part_needs_linear_terms(self, small_grid):
        coeffs = np.ones((small_grid.n_nodes, 1))
        sol = PCSolution(basis=total_order_set(3, 0), coeffs=coeffs)
        with pytest.raises(ValidationError):
            gaussian_part(sol)


def test_constant_boundary_is_certain(small_model, small_grid):
    bc = BcCase.constant(7.0)
    sol = run_full(small_model, small_grid, bc, total_order_set(3, 1), smolyak(3, 1))
    np.testing.assert_allclose(sol.mean, 7.0, atol=1e-9)
    np.testing.assert_allclose(sol.std, 0.0, atol=1e-9)
