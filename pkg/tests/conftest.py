import zlib

import numpy as np
import pytest

from dimerwave.linear import kernel_basis
from dimerwave.model import Material
from dimerwave.operator import WaveProblem

C_DEFAULT = float(np.sqrt(2.0))

# lines reported by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def material():
    return Material.dimer(m=1.0, kappa=2.0, beta=1.0)


@pytest.fixture(scope="session")
def data(material):
    return kernel_basis(material, C_DEFAULT, 32)


@pytest.fixture(scope="session")
def problem(material):
    return WaveProblem(material, C_DEFAULT, 32)


@pytest.fixture
def rng(request):
    # seeded from the test name so each test is reproducible on its own
    return np.random.default_rng(zlib.crc32(request.node.name.encode()))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
