import numpy as np
import pytest

from greenbvp.coefficients import ZERO, Poly
from greenbvp.problem import BvpSpec, dirichlet_problem, mixed_problem


def navier4(M=0.0):
    """u'''' + M u with u = u'' = 0 at both ends of [0, 1]."""
    al = np.zeros((4, 4))
    be = np.zeros((4, 4))
    al[0, 0] = al[1, 2] = 1.0
    be[2, 0] = be[3, 2] = 1.0
    return BvpSpec(4, (0.0, 1.0), (ZERO,) * 4, 0, M, al, be, name="navier4")


def third_order(M=0.0, k=0):
    """u''' + (1+t) u' + M u^(k) with u(0) = u'(0) = u(1) = 0."""
    al = np.zeros((3, 3))
    be = np.zeros((3, 3))
    al[0, 0] = al[1, 1] = 1.0
    be[2, 0] = 1.0
    return BvpSpec(3, (0.0, 1.0), (ZERO, Poly((1.0, 1.0)), ZERO), k, M, al, be, name="third")


def variable_mixed(M=0.0):
    """u'' + (1+t) u + M u, u(0) = u'(1) = 0."""
    return mixed_problem(M, 0, (ZERO, Poly((1.0, 1.0))))


FAMILIES = {
    "mixed-k0": lambda M: mixed_problem(M, 0),
    "mixed-k1": lambda M: mixed_problem(M, 1),
    "dirichlet-k0": lambda M: dirichlet_problem(M, 0),
    "third": third_order,
    "navier4": navier4,
    "variable": variable_mixed,
}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
