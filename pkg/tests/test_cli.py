import argparse

import pytest

from ddadapt import RunConfig, __version__
from ddadapt.cli import _region, build_parser, main

from conftest import small_settings


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.ini"
    RunConfig.from_dict(small_settings(str(tmp_path / "out"))).write(path)
    return path


class TestRegion:
    @pytest.mark.parametrize("text, label", [("3", 3), ("D3", 3), ("d7", 7)])
    def test_labels(self, text, label):
        assert _region(text) == label

    def test_invalid(self):
        with pytest.raises(argparse.ArgumentTypeError):
            _region("east")


class TestParser:
    def test_overrides(self):
        args = build_parser().parse_args(
            ["mc", "--seed", "7", "--workers", "2", "--out", "somewhere"]
        )
        assert (args.command, args.seed, args.workers) == ("mc", 7, 2)
        assert args.out == "somewhere"
        assert args.log_level == "INFO"
        assert args.realizations is None

    def test_mc_realizations(self):
        args = build_parser().parse_args(["mc", "--realizations", "3"])
        assert args.realizations == 3

    def test_compare_requires_runs(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["compare", "--run-a", "x"])

    def test_bad_region(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(
                ["compare", "--run-a", "a", "--run-b", "b", "--region", "east"]
            )

    def test_version(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["--version"])
        assert __version__ in capsys.readouterr().out


class TestMain:
    def test_kl(self, config_file, tmp_path):
        assert main(["kl", "--config", str(config_file)]) == 0
        assert (tmp_path / "out" / "kl" / "eigenvalues_D.csv").exists()

    def test_out_override(self, config_file, tmp_path):
        out = tmp_path / "elsewhere"
        assert main(["kl", "--config", str(config_file), "--out", str(out)]) == 0
        assert (out / "kl" / "truncation.csv").exists()

    def test_bad_config_exits_2(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[stochastic]\nd = zero\n")
        assert main(["kl", "--config", str(path)]) == 2

    def test_missing_run_exits_2(self, config_file, tmp_path):
        missing = str(tmp_path / "missing")
        argv = ["compare", "--config", str(config_file)]
        assert main(argv + ["--run-a", missing, "--run-b", missing]) == 2

    def test_rank_failure_exits_3(self, tmp_path):
        settings = small_settings(
            str(tmp_path / "out"),
            kernel={"l1": 1e5, "l2": 1e5},
            stochastic={"d": 10, "r": 2},
        )
        path = tmp_path / "flat.ini"
        RunConfig.from_dict(settings).write(path)
        assert main(["kl", "--config", str(path)]) == 3

    def test_compare_prints_metrics(self, config_file, tmp_path, capsys):
        assert main(["full", "--config", str(config_file)]) == 0
        run = str(tmp_path / "out" / "full")
        argv = ["compare", "--config", str(config_file), "--region", "D2"]
        assert main(argv + ["--run-a", run, "--run-b", run]) == 0
        out = capsys.readouterr().out
        assert "rel_l2_mean" in out and "D2" in out
