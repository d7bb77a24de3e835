import numpy as np
import pytest

from thermobeam import ModelParams, assemble_generator, build_grid

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(2, 3.0)


@pytest.fixture(scope="session")
def grid16():
    return build_grid(16, np.pi)


@pytest.fixture(scope="session")
def grid64():
    return build_grid(64, np.pi)


def make_gen(n=16, system=1, L=np.pi, **params):
    return assemble_generator(ModelParams(**params), build_grid(n, L), system)
