"""
End-to-end benchmark driver.

This module provides the StochasticDiffusion class, the primary interface
for running the stochastic diffusion benchmark: the KL spectra, the
full-dimensional PC solution, the domain-decomposed adapted solution,
the Monte-Carlo reference and the comparisons between them. Every method
writes its CSV artifacts under the configured output directory.
"""

import logging
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ddadapt.basis_adapt import adapt_all, hilbert_kl, stitch, subdomain_covariance
from ddadapt.basis_adapt import total_cost, truncation_error_indicator
from ddadapt.chaos import pdf_estimate, total_order_set
from ddadapt.collocation import run_coarse_gaussian, run_full
from ddadapt.config import RunConfig
from ddadapt.diffusion_solver import solve_realization
from ddadapt.exceptions import DimensionMismatchError, ValidationError
from ddadapt.mesh import build_grid, partition_snake, quad_weights
from ddadapt.models import CovarianceKernel, LognormalSpec, McResult, PCSolution
from ddadapt.models import PdfEstimate, RandomFieldModel, StageCost, StitchedSolution
from ddadapt.output import read_columns, write_columns, write_fields, write_interface
from ddadapt.output import write_isometry, write_manifest, write_metrics, write_nodes
from ddadapt.output import write_modes, write_partition, write_pdf, write_realization
from ddadapt.output import write_samples, write_spectrum
from ddadapt.random_field import deterministic_model, kl_solve, lognormal_spec
from ddadapt.random_field import realize_a
from ddadapt.sparse_grid import smolyak
from ddadapt.validation import field_error, ks_distance, mc_reference, sample_germs

logger = logging.getLogger(__name__)

Metric = Tuple[str, str, float]


class StochasticDiffusion:
    """
    Driver for the lognormal diffusion benchmark with basis adaptation.

    Args:
        config: Run configuration (default: the benchmark defaults)

    Example:
        >>> from ddadapt import RunConfig, StochasticDiffusion
        >>> app = StochasticDiffusion(RunConfig.from_file("bench.ini"))
        >>>
        >>> # Eigenvalue decay on D and on every subdomain
        >>> spectra = app.kl()
        >>>
        >>> # Full-dimensional and adapted solutions
        >>> full = app.full()
        >>> adapted = app.adapt()
        >>> print(f"Interface mismatch: {adapted.max_mean_mismatch:.3g}")
        >>>
        >>> # Errors and KS distances between the two runs
        >>> metrics = app.compare(app.output_dir / "full", app.output_dir / "adapt")

    Attributes:
        config: The configuration in use.
        grid: Spatial grid.
        partition: Subdomain partition.
        bc: Boundary data.
    """

    def __init__(self, config: Optional[RunConfig] = None) -> None:
        self.config = config or RunConfig()
        geometry = self.config.geometry
        self.grid = build_grid(geometry.box, geometry.n1, geometry.n2)
        self.weights = quad_weights(self.grid)
        self.partition = partition_snake(
            self.grid, self.config.partition.nx, self.config.partition.ny
        )
        self.bc = self.config.boundary.bc
        self._costs: Dict[str, StageCost] = {}

    @property
    def output_dir(self) -> Path:
        return Path(self.config.run.output_dir)

    @cached_property
    def lognormal(self) -> LognormalSpec:
        k = self.config.kernel
        return lognormal_spec(k.a0, k.sigma_a, k.convention)

    @cached_property
    def kernel(self) -> CovarianceKernel:
        k = self.config.kernel
        return CovarianceKernel(sigma_g=self.lognormal.sigma_g, l1=k.l1, l2=k.l2)

    @cached_property
    def model(self) -> RandomFieldModel:
        """KL model of log a; deterministic when the coefficient has no spread."""
        d = self.config.stochastic.d
        if self.kernel.sigma_g == 0.0:
            logger.info("Coefficient spread is zero; using a deterministic field")
            return deterministic_model(self.grid, self.lognormal.g0, d)
        return kl_solve(
            self.kernel,
            self.grid,
            self.weights,
            d,
            g0=self.lognormal.g0,
            method=self.config.kernel.kl_method,
        )

    @cached_property
    def coarse(self) -> PCSolution:
        """First-order solution feeding the subdomain covariances."""
        s = self.config.stochastic
        solution = run_coarse_gaussian(
            self.model,
            self.grid,
            self.bc,
            s.level_coarse,
            s.growth_rule,
            self.config.run.workers,
            self.config.run.chunk_size,
            self.config.boundary.source,
            s.coarse_spatial_factor,
        )
        self._record(solution)
        return solution

    @property
    def costs(self) -> List[StageCost]:
        """Cost of every stage run so far, in run order."""
        return list(self._costs.values())

    def kl(self) -> Dict[str, np.ndarray]:
        """
        Eigenvalues of the input field on D and of the solution on every subdomain.

        Writes kl/eigenvalues_D.csv (index,lambda), kl/modes.csv
        (x1,x2,g_1..g_d), kl/partition.csv (x1,x2,subdomain),
        kl/eigenvalues_D<s>.csv (index,mu) and kl/truncation.csv
        (subdomain,r,indicator).

        Returns:
            Spectra keyed "D", "D1", "D2", ...
        """
        out = self._stage_dir("kl")
        spectra: Dict[str, np.ndarray] = {"D": self.model.lambdas.copy()}
        write_spectrum(out / "eigenvalues_D.csv", self.model.lambdas, name="lambda")
        write_modes(out / "modes.csv", self.grid, self.model.modes)
        write_partition(out / "partition.csv", self.grid, self.partition.labels)

        rows = []
        for s in range(1, self.partition.S + 1):
            cov = subdomain_covariance(self.coarse, self.partition, s, self.grid)
            mu, _ = hilbert_kl(cov)
            spectra[f"D{s}"] = mu
            write_spectrum(out / f"eigenvalues_D{s}.csv", mu)
            if np.sum(mu) > 0.0:
                rows.extend(
                    (s, r, truncation_error_indicator(mu, r))
                    for r in range(1, len(mu) + 1)
                )
        write_columns(
            out / "truncation.csv",
            ["subdomain", "r", "indicator"],
            [
                np.array([row[0] for row in rows], dtype=int),
                np.array([row[1] for row in rows], dtype=int),
                np.array([row[2] for row in rows], dtype=float),
            ],
        )
        logger.info("Wrote %d spectra to %s", len(spectra), out)
        return spectra

    def full(self) -> PCSolution:
        """
        Full-dimensional PC solution over D.

        Writes full/fields.csv, full/nodes.csv, full/pdf_<i>.csv,
        full/samples_<i>.csv and full/manifest.csv.
        """
        s = self.config.stochastic
        sg = smolyak(s.d, s.level_full, s.growth_rule)
        solution = run_full(
            self.model,
            self.grid,
            self.bc,
            total_order_set(s.d, s.p),
            sg,
            self.config.run.workers,
            self.config.run.chunk_size,
            self.config.boundary.source,
        )
        self._record(solution)

        out = self._stage_dir("full")
        write_fields(out / "fields.csv", self.grid, solution.mean, solution.std)
        write_nodes(out / "nodes.csv", sg)
        self._write_pdfs(out, lambda point: solution)
        write_manifest(out / "manifest.csv", [StageCost.from_solution(solution)])
        return solution

    def adapt(self) -> StitchedSolution:
        """
        Coarse Gaussian solve, per-subdomain adaptation and stitching.

        Writes adapt/fields.csv (with the owning subdomain), adapt/interface.csv,
        adapt/D<s>/{eigenvalues,isometry,fields}.csv, PDFs at the sample
        points from the solution of the subdomain containing each point, and
        adapt/manifest.csv with the coarse and per-subdomain solve counts.
        """
        s = self.config.stochastic
        solutions = adapt_all(
            self.model,
            self.grid,
            self.bc,
            self.coarse,
            self.partition,
            s.r,
            s.p,
            s.level_eta,
            s.growth_rule,
            s.r_tolerance,
            self.config.run.workers,
            self.config.run.chunk_size,
            self.config.boundary.source,
        )
        for solution in solutions.values():
            self._record(solution)
        stitched = stitch(solutions, self.partition, self.grid)

        out = self._stage_dir("adapt")
        write_fields(
            out / "fields.csv",
            self.grid,
            stitched.mean,
            stitched.std,
            self.partition.labels,
        )
        write_interface(out / "interface.csv", stitched.interface)
        for label, solution in solutions.items():
            sub = out / f"D{label}"
            if solution.adaptation is not None:
                write_spectrum(sub / "eigenvalues.csv", solution.adaptation.mu)
                write_isometry(sub / "isometry.csv", solution.adaptation)
            write_fields(sub / "fields.csv", self.grid, solution.mean, solution.std)
        self._write_pdfs(out, lambda point: solutions[self.partition.locate(point)])

        costs = [StageCost.from_solution(self.coarse)]
        costs.extend(StageCost.from_solution(sol) for sol in solutions.values())
        write_manifest(out / "manifest.csv", costs)
        logger.info(
            "Adapted pipeline: %d solves, max interface mean mismatch %.3g",
            total_cost(costs)["total"],
            stitched.max_mean_mismatch,
        )
        return stitched

    def mc(
        self, n: Optional[int] = None, realizations: Optional[int] = None
    ) -> McResult:
        """
        Monte-Carlo reference; writes mc/fields.csv and mc/manifest.csv.

        Args:
            n: Sample count (default: the [mc] samples key)
            realizations: Number of leading samples whose solution is also
                written to mc/realization_<i>.csv as x1,x2,u (default: the
                [mc] realizations key)
        """
        result = mc_reference(
            self.model,
            self.grid,
            self.bc,
            n or self.config.mc.samples,
            self.config.run.seed,
            self.config.run.workers,
            self.config.run.chunk_size,
            self.config.boundary.source,
        )
        cost = StageCost(stage="mc", solves=result.n, seconds=result.seconds)
        self._costs[cost.stage] = cost
        out = self._stage_dir("mc")
        write_fields(out / "fields.csv", self.grid, result.mean, result.std)
        write_manifest(out / "manifest.csv", [cost])

        k = self.config.mc.realizations if realizations is None else realizations
        if k > result.n:
            raise ValidationError(
                "More realizations requested than samples", {"k": k, "n": result.n}
            )
        if k:
            germs = sample_germs(self.model.d, k, self.config.run.seed)
            for i, xi in enumerate(germs, start=1):
                u = solve_realization(
                    self.grid,
                    realize_a(self.model, xi),
                    self.bc,
                    self.config.boundary.source,
                )
                write_realization(out / f"realization_{i}.csv", self.grid, u)
            logger.info("Wrote %d Monte-Carlo realizations to %s", k, out)
        return result

    def compare(
        self,
        run_a: Union[str, Path],
        run_b: Union[str, Path],
        region: Optional[int] = None,
    ) -> List[Metric]:
        """
        Compare two run directories; run_b is the reference.

        Args:
            run_a: Directory with fields.csv (and optionally samples_<i>.csv)
            run_b: Reference directory of the same layout
            region: Restrict the metrics to one subdomain label

        Returns:
            (metric, region, value) rows: rel_l2_mean and rel_l2_std per
            region (0 where both std fields vanish), and ks per sample point
            present in both runs. The same rows go to compare/metrics.csv;
            error fields go to compare/errors.csv.

        Raises:
            ValidationError: If region is not a subdomain label
            DimensionMismatchError: If a run was made on another grid
        """
        run_a, run_b = Path(run_a), Path(run_b)
        if region is not None and not 1 <= region <= self.partition.S:
            raise ValidationError(
                "Unknown subdomain", {"region": region, "S": self.partition.S}
            )
        fields_a = self._read_fields(run_a)
        fields_b = self._read_fields(run_b)

        mean_error = fields_a["mean"] - fields_b["mean"]
        std_error = fields_a["std"] - fields_b["std"]
        out = self._stage_dir("compare")
        write_columns(
            out / "errors.csv",
            ["x1", "x2", "mean_error", "std_error"],
            [self.grid.nodes[:, 0], self.grid.nodes[:, 1], mean_error, std_error],
        )

        regions: List[Tuple[str, Optional[np.ndarray]]]
        if region is None:
            regions = [("D", None)]
            regions += [
                (f"D{s}", self.partition.nodes_of(s))
                for s in range(1, self.partition.S + 1)
            ]
        else:
            regions = [(f"D{region}", self.partition.nodes_of(region))]

        metrics: List[Metric] = []
        w = self.weights.w
        for name, nodes in regions:
            for key in ("mean", "std"):
                value = field_error(fields_a[key], fields_b[key], w, nodes)
                metrics.append((f"rel_l2_{key}", name, value))

        for i, point in enumerate(self.config.pdf.points, start=1):
            if region is not None and self.partition.locate(point) != region:
                continue
            path_a, path_b = run_a / f"samples_{i}.csv", run_b / f"samples_{i}.csv"
            if path_a.exists() and path_b.exists():
                ks = ks_distance(
                    read_columns(path_a)["sample"], read_columns(path_b)["sample"]
                )
                metrics.append(("ks", f"P{i}", ks))

        write_metrics(out / "metrics.csv", metrics)
        return metrics

    def bench(self) -> Dict[str, int]:
        """
        kl, full, adapt and compare in one go.

        Returns:
            Deterministic solves per stage and in total, as in total_cost.
        """
        self.kl()
        self.full()
        self.adapt()
        self.compare(self.output_dir / "adapt", self.output_dir / "full")
        counts = total_cost(self.costs)
        write_manifest(self.output_dir / "manifest.csv", self.costs)
        logger.info("Benchmark finished: %s", counts)
        return counts

    def _record(self, solution: PCSolution) -> None:
        cost = StageCost.from_solution(solution)
        self._costs[cost.stage] = cost

    def _stage_dir(self, name: str) -> Path:
        """Create output_dir/name and drop a snapshot of the configuration in it."""
        out = self.output_dir / name
        out.mkdir(parents=True, exist_ok=True)
        self.config.write(out / "config.ini")
        return out

    def _write_pdfs(
        self, out: Path, solution_at: Callable[[Sequence[float]], PCSolution]
    ) -> List[PdfEstimate]:
        estimates = []
        for i, point in enumerate(self.config.pdf.points, start=1):
            estimate = pdf_estimate(
                solution_at(point),
                self.grid,
                point,
                self.config.pdf.samples,
                seed=[self.config.run.seed, i],
            )
            write_pdf(out / f"pdf_{i}.csv", estimate)
            write_samples(out / f"samples_{i}.csv", estimate.samples)
            estimates.append(estimate)
        return estimates

    def _read_fields(self, run: Path) -> Dict[str, np.ndarray]:
        path = run / "fields.csv"
        if not path.exists():
            raise ValidationError("Run directory has no fields.csv", {"run": str(run)})
        columns = read_columns(path)
        if columns["mean"].shape[0] != self.grid.n_nodes:
            raise DimensionMismatchError(
                "Run was made on another grid",
                self.grid.n_nodes,
                columns["mean"].shape[0],
            )
        return columns

    def __repr__(self) -> str:
        return (
            f"StochasticDiffusion(grid={self.grid.n1}x{self.grid.n2}, "
            f"d={self.config.stochastic.d}, S={self.partition.S})"
        )
