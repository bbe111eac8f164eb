import numpy as np
import pytest

from loglog_nls.core import ModelParams
from loglog_nls.spectral import build_basis, make_grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def basis3():
    return build_basis(make_grid(3, 128, 20.0))


@pytest.fixture(scope="session")
def basis4():
    return build_basis(make_grid(4, 128, 20.0))


@pytest.fixture(scope="session")
def params3():
    return ModelParams(n=3, c=1e-4)


@pytest.fixture(scope="session")
def params4():
    return ModelParams(n=4, c=1e-4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
