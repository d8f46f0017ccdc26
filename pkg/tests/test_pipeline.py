import numpy as np
import pytest

from ddadapt import RunConfig, StochasticDiffusion
from ddadapt.diffusion_solver import solve_realization
from ddadapt.exceptions import ValidationError
from ddadapt.output import read_columns, read_manifest, read_rows
from ddadapt.random_field import realize_a
from ddadapt.sparse_grid import smolyak
from ddadapt.validation import sample_germs

from conftest import small_settings


@pytest.fixture
def app(small_config):
    return StochasticDiffusion(small_config)


class TestKl:
    def test_spectra(self, app):
        spectra = app.kl()
        assert list(spectra) == ["D"] + [f"D{s}" for s in range(1, 9)]
        assert spectra["D"].shape == (3,)
        out = app.output_dir / "kl"
        assert (out / "eigenvalues_D4.csv").exists()
        assert (out / "config.ini").exists()
        truncation = read_columns(out / "truncation.csv")
        assert set(truncation["subdomain"]) == set(range(1, 9))

    def test_modes_and_partition(self, app):
        app.kl()
        out = app.output_dir / "kl"
        modes = read_columns(out / "modes.csv")
        assert list(modes) == ["x1", "x2", "g_1", "g_2", "g_3"]
        for i in range(3):
            np.testing.assert_array_equal(modes[f"g_{i + 1}"], app.model.modes[:, i])
        partition = read_columns(out / "partition.csv")
        np.testing.assert_array_equal(partition["x1"], app.grid.nodes[:, 0])
        np.testing.assert_array_equal(partition["subdomain"], app.partition.labels)

    def test_rerun_is_byte_identical(self, small_config):
        first = StochasticDiffusion(small_config)
        first.kl()
        path = first.output_dir / "kl" / "eigenvalues_D.csv"
        before = path.read_bytes()
        StochasticDiffusion(small_config).kl()
        assert path.read_bytes() == before


class TestFull:
    def test_fields_and_manifest(self, app):
        solution = app.full()
        out = app.output_dir / "full"
        fields = read_columns(out / "fields.csv")
        assert fields["mean"].min() >= 10.0 - 1e-8
        assert fields["mean"].max() <= 100.0 + 1e-8
        np.testing.assert_array_equal(fields["mean"], solution.mean)
        assert read_manifest(out / "manifest.csv")["full"] == smolyak(3, 2).size
        for i in range(1, 9):
            assert (out / f"pdf_{i}.csv").exists()
            assert read_columns(out / f"samples_{i}.csv")["sample"].size == 400


class TestAdapt:
    def test_stitched_run(self, app):
        stitched = app.adapt()
        out = app.output_dir / "adapt"
        manifest = read_manifest(out / "manifest.csv")
        assert manifest["coarse"] == smolyak(3, 1).size
        assert manifest["total"] == smolyak(3, 1).size + 8 * smolyak(2, 2).size
        assert read_columns(out / "D1" / "isometry.csv")["a_ij"].size == 9
        fields = read_columns(out / "fields.csv")
        np.testing.assert_array_equal(fields["subdomain"], app.partition.labels)
        np.testing.assert_array_equal(fields["mean"], stitched.mean)
        assert len(read_rows(out / "interface.csv")) == len(stitched.interface)

    def test_costs_recorded(self, app):
        app.adapt()
        stages = [cost.stage for cost in app.costs]
        assert stages == ["coarse"] + [f"adapt:D{s}" for s in range(1, 9)]


class TestCompare:
    def test_run_against_itself(self, app):
        app.full()
        full = app.output_dir / "full"
        metrics = app.compare(full, full)
        regions = {region for metric, region, _ in metrics if metric != "ks"}
        assert regions == {"D"} | {f"D{s}" for s in range(1, 9)}
        assert sum(1 for metric, _, _ in metrics if metric == "ks") == 8
        assert all(value == 0.0 for _, _, value in metrics)
        assert (app.output_dir / "compare" / "metrics.csv").exists()

    def test_single_region(self, app):
        app.full()
        full = app.output_dir / "full"
        metrics = app.compare(full, full, region=3)
        assert [(m, r) for m, r, _ in metrics] == [
            ("rel_l2_mean", "D3"),
            ("rel_l2_std", "D3"),
            ("ks", "P3"),
        ]

    def test_unknown_region(self, app):
        with pytest.raises(ValidationError):
            app.compare(app.output_dir, app.output_dir, region=9)

    def test_missing_run(self, app, tmp_path):
        with pytest.raises(ValidationError):
            app.compare(tmp_path / "nothing", tmp_path / "nothing")


class TestMonteCarlo:
    def test_reference(self, app):
        result = app.mc()
        assert result.n == 100
        assert read_manifest(app.output_dir / "mc" / "manifest.csv")["mc"] == 100
        fields = read_columns(app.output_dir / "mc" / "fields.csv")
        np.testing.assert_array_equal(fields["std"], result.std)

    def test_realizations(self, app):
        app.mc(realizations=2)
        out = app.output_dir / "mc"
        assert (out / "realization_2.csv").exists()
        assert not (out / "realization_3.csv").exists()
        first = read_columns(out / "realization_1.csv")
        assert list(first) == ["x1", "x2", "u"]
        xi = sample_germs(3, 1, app.config.run.seed)[0]
        expected = solve_realization(app.grid, realize_a(app.model, xi), app.bc)
        np.testing.assert_allclose(first["u"], expected, rtol=1e-12)

    def test_too_many_realizations(self, app):
        with pytest.raises(ValidationError):
            app.mc(n=100, realizations=101)


def test_bench_all_dirichlet(tmp_path):
    config = RunConfig.from_dict(
        small_settings(str(tmp_path / "out"), boundary={"case": "all_dirichlet"})
    )
    app = StochasticDiffusion(config)
    counts = app.bench()
    assert counts["full"] == smolyak(3, 2).size
    assert counts["total"] == (
        smolyak(3, 2).size + smolyak(3, 1).size + 8 * smolyak(2, 2).size
    )
    fields = read_columns(app.output_dir / "adapt" / "fields.csv")
    assert fields["mean"].min() >= -1e-8
    assert fields["mean"].max() <= 100.0 + 1e-8
    assert read_manifest(app.output_dir / "manifest.csv")["total"] == counts["total"]


class TestZeroSpread:
    @pytest.fixture
    def flat_app(self, tmp_path):
        config = RunConfig.from_dict(
            small_settings(str(tmp_path / "out"), kernel={"sigma_a": 0.0})
        )
        return StochasticDiffusion(config)

    def test_bench_completes(self, flat_app):
        counts = flat_app.bench()
        assert counts["total"] == smolyak(3, 2).size + smolyak(3, 1).size + 8
        for s in range(1, 9):
            assert counts[f"adapt:D{s}"] == 1

        metrics = read_rows(flat_app.output_dir / "compare" / "metrics.csv")
        std_rows = [row for row in metrics if row["metric"] == "rel_l2_std"]
        assert len(std_rows) == 9
        assert all(float(row["value"]) == 0.0 for row in std_rows)
        mean_rows = [row for row in metrics if row["metric"] == "rel_l2_mean"]
        assert all(float(row["value"]) <= 1e-9 for row in mean_rows)

    def test_adapted_std_vanishes(self, flat_app):
        stitched = flat_app.adapt()
        np.testing.assert_array_equal(stitched.std, 0.0)
        assert all(sol.adaptation.r == 0 for sol in stitched.solutions.values())
        pdf = read_columns(flat_app.output_dir / "adapt" / "pdf_1.csv")
        assert np.isinf(pdf["density"]).all()

    def test_full_is_deterministic(self, flat_app):
        solution = flat_app.full()
        np.testing.assert_allclose(solution.std, 0.0, atol=1e-9)
