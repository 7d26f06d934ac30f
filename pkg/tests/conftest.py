from __future__ import annotations

import numpy as np
import pytest

from core.domain.entities.powerflow_entity import VoltageSeries
from core.services.grid_model import build_grid, synth_grid


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def chain_grid():
    """0 - 1 - 2 - 3"""
    return build_grid(
        [
            {"child": 1, "parent": 0, "r": 0.01, "x": 0.02},
            {"child": 2, "parent": 1, "r": 0.02, "x": 0.01},
            {"child": 3, "parent": 2, "r": 0.03, "x": 0.03},
        ]
    )


@pytest.fixture
def star_grid():
    """Root feeds bus 1, bus 1 feeds 2, 3 and 4; bus 4 feeds 5."""
    return build_grid(
        [
            {"child": 1, "parent": 0, "r": 0.01, "x": 0.01},
            {"child": 2, "parent": 1, "r": 0.02, "x": 0.01},
            {"child": 3, "parent": 1, "r": 0.015, "x": 0.02},
            {"child": 4, "parent": 1, "r": 0.01, "x": 0.03},
            {"child": 5, "parent": 4, "r": 0.02, "x": 0.02},
        ]
    )


@pytest.fixture
def random_grid():
    return synth_grid(12, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def white_series(rng):
    """Independent buses around 1.0 pu."""
    V = 1.0 + 0.01 * rng.standard_normal((400, 4))
    return VoltageSeries(V=V)
