import logging

import pytest
import torch

from boltzbit.numerics import RandomStream
from boltzbit.schema.models import ArchitectureSpec
from boltzbit.settings import config
from boltzbit.targets import GmmTarget

# Configure logging
logging.basicConfig(level=logging.WARN)

config.progress = False


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return RandomStream(1234)


@pytest.fixture
def zeros2():
    return torch.zeros(2, dtype=torch.float64)


@pytest.fixture
def two_mode_gmm():
    return GmmTarget(
        torch.tensor([0.3, 0.7], dtype=torch.float64),
        torch.tensor([[-3.0, 0.0], [3.0, 1.0]], dtype=torch.float64),
        0.5,
    )


@pytest.fixture
def small_mlp():
    return ArchitectureSpec(dim=2, width=16, depth=2, embedding_size=4)


@pytest.fixture
def small_egnn():
    return ArchitectureSpec(kind="egnn", dim=8, n_particles=4, space_dim=2, width=16, depth=2, embedding_size=4)

