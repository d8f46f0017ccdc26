"""Shared fixtures: a coarse 25 x 7 version of the benchmark problem."""

from typing import Any, Dict

import numpy as np
import pytest

from ddadapt.config import RunConfig
from ddadapt.mesh import build_grid, partition_snake, quad_weights
from ddadapt.models import BcCase, Box, CovarianceKernel, StructuredGrid
from ddadapt.random_field import kl_solve, lognormal_spec

BENCHMARK_BOX = Box(0.0, 240.0, 0.0, 60.0)


def small_settings(
    output_dir: str, **sections: Dict[str, Any]
) -> Dict[str, Dict[str, Any]]:
    """Config sections for a run that finishes in seconds."""
    data: Dict[str, Dict[str, Any]] = {
        "geometry": {"n1": 25, "n2": 7},
        "stochastic": {
            "d": 3,
            "p": 2,
            "smolyak_level_full": 3,
            "smolyak_level_coarse": 2,
            "smolyak_level_eta": 3,
            "r": 2,
        },
        "pdf": {"samples": 400},
        "mc": {"samples": 100},
        "run": {"output_dir": output_dir},
    }
    for name, values in sections.items():
        data.setdefault(name, {}).update(values)
    return data


@pytest.fixture
def box() -> Box:
    return BENCHMARK_BOX


@pytest.fixture
def small_grid() -> StructuredGrid:
    return build_grid(BENCHMARK_BOX, 25, 7)


@pytest.fixture
def small_weights(small_grid):
    return quad_weights(small_grid)


@pytest.fixture
def small_partition(small_grid):
    return partition_snake(small_grid, 4, 2)


@pytest.fixture
def lognormal():
    return lognormal_spec(5.0, 2.5)


@pytest.fixture
def kernel(lognormal) -> CovarianceKernel:
    return CovarianceKernel(sigma_g=lognormal.sigma_g, l1=24.0, l2=20.0)


@pytest.fixture
def small_model(kernel, small_grid, small_weights, lognormal):
    return kl_solve(kernel, small_grid, small_weights, 3, g0=lognormal.g0)


@pytest.fixture
def mixed() -> BcCase:
    return BcCase.mixed()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def small_config(tmp_path) -> RunConfig:
    return RunConfig.from_dict(small_settings(str(tmp_path / "out")))
