import sys
from pathlib import Path

import pytest
import sympy as sp

sys.path.insert(0, str(Path(__file__).parent))

from moebiusflat import Grid, WilczynskiData  # noqa: E402
from moebiusflat.centroaffine import CentroAffineImmersion  # noqa: E402

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def grid():
    return Grid()


@pytest.fixture(scope="session")
def small_grid():
    return Grid.spanning(21, 21)


@pytest.fixture(scope="session")
def quadric(grid):
    return WilczynskiData.build(grid)


@pytest.fixture(scope="session")
def e2(grid):
    return WilczynskiData.build(grid, beta=1, gamma=1, V=0, W=0, alpha=0)


@pytest.fixture(scope="session")
def e3(grid):
    return WilczynskiData.build(grid, beta=2, gamma=1, V="5/2", W="3/2", a=1, b=1, alpha="(x + y)/2")


@pytest.fixture(scope="session")
def ramp(grid):
    """Non-constant data with a potential: beta = 2y+1, gamma = 1/(2y+1)."""
    return WilczynskiData.build(grid, beta="2*y + 1", gamma="1/(2*y + 1)", V="2*x^2",
                                W="2*x/(2*y + 1)", alpha="x^2/2")


@pytest.fixture(scope="session")
def tzitzeica(grid):
    return CentroAffineImmersion.from_exprs(["exp(x)", "exp(y)", "exp(-x - y)"], grid)


@pytest.fixture(scope="session")
def data_dir():
    return DATA


X, Y = sp.symbols("x y")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
