import numpy as np
import pytest

from loopsoliton.curve import make_curve
from loopsoliton.kleinian import make_context

# criterion number -> (verdict, detail), filled by the acceptance module
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        verdict, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {verdict}  {detail}")


@pytest.fixture(scope="session")
def lemniscatic():
    return make_curve((0, -1, 0, 1))


@pytest.fixture(scope="session")
def quintic():
    return make_curve((0, 4, 0, -5, 0, 1))


@pytest.fixture(scope="session")
def complex_quintic():
    return make_curve((0.3, 1, -0.2, 0.5, 0.1, 1))


@pytest.fixture(scope="session")
def ctx1(lemniscatic):
    return make_context(lemniscatic)


@pytest.fixture(scope="session")
def ctx2(quintic):
    return make_context(quintic)


@pytest.fixture(scope="session")
def ctx2c(complex_quintic):
    return make_context(complex_quintic)


@pytest.fixture
def rng():
    return np.random.default_rng(20260518)
