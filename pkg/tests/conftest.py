import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pertfool.data import gen_blobs
from pertfool.network import Layer, Network, TrainConfig, random_network, train_sgd

P_GRID = (1.0, 1.5, 2.0, 3.0, np.inf)

# verdict lines collected by the acceptance suite, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def tanh_net():
    """Small fixed-seed 3-layer tanh network, 4 -> 6 -> 5 -> 3."""
    return random_network([4, 6, 5, 3], "tanh", seed=7)


@pytest.fixture
def linear_binary_net():
    """Hand-built linear 2-class classifier on the plane."""
    w = np.array([[1.0, 2.0], [-1.0, 0.5]])
    b = np.array([0.3, -0.1])
    return Network([Layer(w=w, b=b, act="identity")])


def make_toy_problem(seed=3, n_train=600, n_test=300, dim=12, n_classes=3,
                     separation=0.5, noise=0.06, epochs=12, hidden=(24, 16)):
    """Train a small tanh classifier on blobs; returns (net, train, test)."""
    data = gen_blobs(n_samples=n_train + n_test, n_classes=n_classes, dim=dim,
                     seed=seed, separation=separation, noise=noise)
    train, test = data.split(n_train)
    sizes = [dim, *hidden, n_classes]
    net = random_network(sizes, ["tanh"] * len(hidden) + ["identity"], seed=seed)
    net = train_sgd(net, train, TrainConfig(seed=seed, epochs=epochs))
    return net, train, test


@pytest.fixture(scope="session")
def toy_problem():
    return make_toy_problem()
