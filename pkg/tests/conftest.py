import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from greenspread import BACKENDS, MultilayerNetwork, NetworkConfig, assemble_network  # noqa: E402

DESK = dict(n_banks=25, n_firms=1000)

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def hand_network(lambda_f=2):
    """3 banks, 5 firms; small enough to trace by hand."""
    if lambda_f == 2:
        inter = [(0, 0), (1, 0), (0, 1), (2, 1), (1, 2), (2, 2), (0, 3), (1, 3), (0, 4), (2, 4)]
    else:
        inter = [(0, 0), (0, 1), (1, 2), (2, 3), (2, 4)]
    cfg = NetworkConfig(n_banks=3, n_firms=5, lambda_f=lambda_f, bank_mean_degree=1.0, ba_m=1)
    assets = np.array([3.0, 2.0, 1.0])
    loans = {}
    for b, f in sorted(inter):
        loans[f] = loans.get(f, 0.0) + cfg.theta_bar * assets[b] * 3 / 5
    return MultilayerNetwork(
        config=cfg,
        bank_edges=[(0, 1), (1, 2)],
        firm_edges=[(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)],
        interlayer_edges=inter,
        assets=assets,
        firm_sizes=[loans[f] for f in range(5)],
    )


@pytest.fixture(scope="session")
def hand_net():
    return hand_network()


@pytest.fixture(scope="session")
def desk_net():
    return assemble_network(NetworkConfig(**DESK, seed=11))


@pytest.fixture(scope="session")
def full_net():
    return assemble_network(NetworkConfig(seed=2024))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param
