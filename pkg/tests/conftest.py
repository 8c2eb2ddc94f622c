import numpy as np
import pytest

from tlmor import ReducedModel, StateSpaceModel

_ACCEPTANCE = []


def scaled(rng, k, rho):
    """Random k x k matrix with spectral radius exactly ``rho``."""
    X = rng.standard_normal((k, k))
    return rho * X / np.max(np.abs(np.linalg.eigvals(X)))


def random_rom(rng, r, m, p, rho=0.8):
    return ReducedModel(scaled(rng, r, rho), rng.standard_normal((r, m)),
                        rng.standard_normal((p, r)))


def random_model(rng, n, m, p, rho=0.8):
    return StateSpaceModel(scaled(rng, n, rho), rng.standard_normal((n, m)),
                           rng.standard_normal((p, n)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def acceptance_report():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)
