import numpy as np
import pytest

from qha.grid import ConfigGrid, PhaseGrid
from qha.hermite import HermiteBasis, basis_from_config


@pytest.fixture(scope="session")
def phase():
    return PhaseGrid(1, 8.0, 256)


@pytest.fixture(scope="session")
def small_phase():
    return PhaseGrid(1, 4.0, 64)


@pytest.fixture(scope="session")
def basis():
    return basis_from_config(8.0, 256, 64)


@pytest.fixture(scope="session")
def standard_basis():
    # the unscaled h_k need a wider box than the isotropic ones
    return basis_from_config(16.0, 256, 64, kind="standard")


@pytest.fixture(scope="session")
def small_basis():
    return HermiteBasis.isotropic(ConfigGrid(1, 4.0, 64), 12)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    lines = getattr(module, "SUMMARY", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
