import math

import numpy as np
import pytest

from ddadapt.basis_adapt import (
    adapt_all,
    adapt_subdomain,
    build_isometry,
    constant_isometry,
    exact_truncation_error,
    hilbert_kl,
    map_nodes,
    numerical_rank,
    run_adapted,
    select_dimension,
    stitch,
    subdomain_covariance,
    total_cost,
    truncation_error_indicator,
)
from ddadapt.chaos import pdf_estimate, total_order_set
from ddadapt.collocation import run_coarse_gaussian
from ddadapt.constants import VariableTag
from ddadapt.diffusion_solver import solve_realization
from ddadapt.exceptions import RankError, ValidationError
from ddadapt.models import PCSolution, StageCost, SubdomainCovariance
from ddadapt.random_field import deterministic_model


@pytest.fixture
def gauss(small_model, small_grid, mixed):
    return run_coarse_gaussian(small_model, small_grid, mixed, 1)


@pytest.fixture
def cov(gauss, small_partition, small_grid):
    return subdomain_covariance(gauss, small_partition, 1, small_grid)


def constant_solution(grid, value, d=2):
    basis = total_order_set(d, 1)
    coeffs = np.zeros((grid.n_nodes, basis.size))
    coeffs[:, 0] = value
    coeffs[:, 1] = 0.5 * value
    return PCSolution(basis=basis, coeffs=coeffs)


class TestSubdomainCovariance:
    def test_factor_shape(self, cov):
        assert cov.factor.shape == (28, 3)
        assert cov.weights.sum() == pytest.approx(1800.0)

    def test_matrix_is_factored_product(self, cov):
        np.testing.assert_allclose(cov.matrix, cov.factor @ cov.factor.T)
        np.testing.assert_allclose(np.diag(cov.matrix), cov.diagonal)

    def test_requires_linear_terms(self, small_grid, small_partition):
        basis = total_order_set(3, 0)
        sol = PCSolution(basis=basis, coeffs=np.ones((small_grid.n_nodes, 1)))
        with pytest.raises(ValidationError):
            subdomain_covariance(sol, small_partition, 1, small_grid)


class TestHilbertKl:
    def test_spectrum_carries_the_trace(self, cov):
        mu, _ = hilbert_kl(cov)
        assert mu.shape == (3,)
        assert np.all(np.diff(mu) <= 0) and np.all(mu >= 0)
        assert mu.sum() == pytest.approx(cov.weighted_trace, rel=1e-8)

    def test_eigenfunctions_weighted_orthonormal(self, cov):
        mu, phi = hilbert_kl(cov)
        k = numerical_rank(mu)
        gram = phi[:, :k].T @ (cov.weights[:, None] * phi[:, :k])
        np.testing.assert_allclose(gram, np.eye(k), atol=1e-10)

    def test_eigen_equation(self, cov):
        mu, phi = hilbert_kl(cov)
        lhs = cov.matrix @ (cov.weights * phi[:, 0])
        np.testing.assert_allclose(lhs, mu[0] * phi[:, 0], atol=1e-8 * mu[0])


class TestBuildIsometry:
    def test_orthogonal(self, cov):
        mu, phi = hilbert_kl(cov)
        amap = build_isometry(cov, mu, phi, 2)
        assert amap.A.shape == (3, 3)
        assert amap.orthogonality_error <= 1e-10
        assert amap.reduced_inverse.shape == (3, 2)

    def test_leading_rows_follow_the_eigenpairs(self, cov):
        mu, phi = hilbert_kl(cov)
        amap = build_isometry(cov, mu, phi, 2)
        for i in range(2):
            row = (amap.phi[:, i] * cov.weights) @ cov.factor / np.sqrt(mu[i])
            np.testing.assert_allclose(amap.A[i], row, atol=1e-8)

    def test_map_nodes_preserves_norms(self, cov, rng):
        mu, phi = hilbert_kl(cov)
        amap = build_isometry(cov, mu, phi, 2)
        eta = rng.standard_normal((20, 2))
        xi = map_nodes(amap, eta)
        assert xi.shape == (20, 3)
        np.testing.assert_allclose(
            np.linalg.norm(xi, axis=1), np.linalg.norm(eta, axis=1)
        )

    def test_rank_deficient_factor(self, cov):
        column = np.linspace(1.0, 2.0, cov.nodes.size)
        flat = SubdomainCovariance(
            subdomain=1,
            nodes=cov.nodes,
            factor=np.outer(column, [1.0, 2.0, 0.0]),
            weights=cov.weights,
        )
        mu, phi = hilbert_kl(flat)
        assert numerical_rank(mu) == 1
        with pytest.raises(RankError) as info:
            build_isometry(flat, mu, phi, 2)
        assert info.value.rank == 1
        amap = build_isometry(flat, mu, phi, 1)
        np.testing.assert_allclose(
            np.abs(amap.A[0]), np.array([1.0, 2.0, 0.0]) / np.sqrt(5.0)
        )
        assert amap.orthogonality_error <= 1e-10

    def test_rejects_zero_dimension(self, cov):
        mu, phi = hilbert_kl(cov)
        with pytest.raises(RankError):
            build_isometry(cov, mu, phi, 0)

    def test_eta_is_standard_normal(self, cov):
        mu, phi = hilbert_kl(cov)
        amap = build_isometry(cov, mu, phi, 2)
        xi = np.random.default_rng(7).standard_normal((100_000, 3))
        eta = xi @ amap.A.T
        np.testing.assert_allclose(np.cov(eta, rowvar=False), np.eye(3), atol=0.05)

    def test_constant_isometry(self, cov):
        mu, phi = hilbert_kl(cov)
        amap = constant_isometry(cov, mu, phi)
        assert amap.r == 0
        np.testing.assert_array_equal(amap.A, np.eye(3))
        xi = map_nodes(amap, np.zeros((1, 0)))
        np.testing.assert_array_equal(xi, np.zeros((1, 3)))


class TestTruncation:
    def test_indicator(self):
        assert truncation_error_indicator([3.0, 1.0], 1) == pytest.approx(0.25)
        assert truncation_error_indicator([3.0, 1.0], 2) == 0.0
        assert truncation_error_indicator([1.0, 0.0, 0.0], 1) == 0.0

    def test_zero_spectrum(self):
        with pytest.raises(ValidationError):
            truncation_error_indicator([0.0, 0.0], 1)

    def test_indicator_decreases_to_zero_at_rank(self, cov):
        mu, _ = hilbert_kl(cov)
        rank = numerical_rank(mu)
        values = [truncation_error_indicator(mu, r) for r in range(rank + 1)]
        assert values[0] == 1.0
        assert all(b <= a for a, b in zip(values, values[1:]))
        assert values[rank] == pytest.approx(0.0, abs=1e-12)

    def test_select_dimension(self):
        assert select_dimension([1.0, 0.5, 0.001], 0.01) == 2
        assert select_dimension([1.0, 0.0, 0.0], 0.01) == 1
        assert select_dimension([1.0, 1.0, 1.0], 1e-6) == 3


class TestAdapt:
    def test_adapted_solution(
        self, small_model, small_grid, mixed, gauss, small_partition
    ):
        sol = adapt_subdomain(
            small_model, small_grid, mixed, gauss, small_partition, 3, 2, 2, 2
        )
        assert sol.variable_tag is VariableTag.ETA
        assert sol.subdomain == 3
        assert sol.dimension == 2
        assert sol.stage == "adapt:D3"
        assert sol.meta["r"] == 2
        assert sol.adaptation is not None and sol.adaptation.r == 2

    def test_automatic_dimension(
        self, small_model, small_grid, mixed, gauss, small_partition
    ):
        sol = adapt_subdomain(
            small_model, small_grid, mixed, gauss, small_partition, 1, None, 1, 1
        )
        assert 1 <= sol.dimension <= 3

    def test_worker_count_does_not_change_result(
        self, small_model, small_grid, mixed, gauss, small_partition
    ):
        args = (small_model, small_grid, mixed, gauss, small_partition, 1, 2, 2)
        serial = adapt_all(*args, workers=1)
        pooled = adapt_all(*args, workers=3)
        assert list(serial) == list(range(1, 9))
        for s in serial:
            np.testing.assert_array_equal(serial[s].coeffs, pooled[s].coeffs)

    def test_per_subdomain_dimensions(
        self, small_model, small_grid, mixed, gauss, small_partition
    ):
        dims = {s: 1 + s % 2 for s in range(1, 9)}
        solutions = adapt_all(
            small_model, small_grid, mixed, gauss, small_partition, dims, 1, 1
        )
        assert {s: sol.dimension for s, sol in solutions.items()} == dims

    def test_exact_truncation_error_against_itself(
        self, small_model, small_grid, mixed, gauss, small_partition
    ):
        sol = adapt_subdomain(
            small_model, small_grid, mixed, gauss, small_partition, 2, 2, 1, 1
        )
        errors = exact_truncation_error(sol, sol, small_partition.nodes_of(2))
        assert errors == {"mean": 0.0, "std": 0.0}

    def test_zero_rank_subdomain_keeps_mean_only(
        self, small_grid, mixed, small_partition
    ):
        model = deterministic_model(small_grid, math.log(5.0), 3)
        gauss = run_coarse_gaussian(model, small_grid, mixed, 1)
        sol = adapt_subdomain(
            model, small_grid, mixed, gauss, small_partition, 1, 2, 2, 2
        )
        assert sol.adaptation is not None and sol.adaptation.r == 0
        assert sol.dimension == 0
        assert sol.solves == 1
        a = np.full(small_grid.n_nodes, 5.0)
        expected = solve_realization(small_grid, a, mixed)
        np.testing.assert_allclose(sol.mean, expected, atol=1e-9)
        np.testing.assert_array_equal(sol.std, 0.0)
        assert pdf_estimate(sol, small_grid, (24.0, 15.0), 200, seed=1).degenerate

    def test_deterministic_model_gives_constant_solution(self, cov, small_grid, mixed):
        mu, phi = hilbert_kl(cov)
        amap = build_isometry(cov, mu, phi, 2)
        model = deterministic_model(small_grid, math.log(5.0), 3)
        sol = run_adapted(model, small_grid, mixed, amap, 2, 2)
        a = np.full(small_grid.n_nodes, 5.0)
        expected = solve_realization(small_grid, a, mixed)
        np.testing.assert_allclose(sol.mean, expected, atol=1e-9)
        np.testing.assert_allclose(sol.std, 0.0, atol=1e-9)


class TestStitch:
    def test_each_node_takes_its_own_label(self, small_grid, small_partition):
        solutions = {s: constant_solution(small_grid, s) for s in range(1, 9)}
        stitched = stitch(solutions, small_partition, small_grid)
        np.testing.assert_allclose(stitched.mean, small_partition.labels)
        np.testing.assert_allclose(stitched.std, 0.5 * small_partition.labels)

    def test_interface_mismatch(self, small_grid, small_partition):
        solutions = {s: constant_solution(small_grid, s) for s in range(1, 9)}
        stitched = stitch(solutions, small_partition, small_grid)
        corner = small_grid.index(6, 3)
        at_corner = {
            (rec.subdomain_a, rec.subdomain_b): rec.mean_mismatch
            for rec in stitched.interface
            if rec.node == corner
        }
        assert at_corner[(1, 8)] == pytest.approx(7.0)
        assert at_corner[(2, 7)] == pytest.approx(5.0)
        assert stitched.max_mean_mismatch == pytest.approx(7.0)

    def test_missing_solution(self, small_grid, small_partition):
        solutions = {s: constant_solution(small_grid, 1.0) for s in range(1, 8)}
        with pytest.raises(ValidationError) as info:
            stitch(solutions, small_partition, small_grid)
        assert info.value.context["missing"] == [8]


def test_total_cost():
    stages = [StageCost("coarse", 221)]
    stages += [StageCost(f"adapt:D{s}", 165) for s in range(1, 9)]
    counts = total_cost(stages)
    assert counts["total"] == 1541
    assert counts["coarse"] == 221
    assert counts["adapt:D8"] == 165
