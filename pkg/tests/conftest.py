import numpy as np
import pytest

from swdg.mesh import build_uniform_mesh

PERIODIC = {"left": "periodic", "right": "periodic", "bottom": "periodic", "top": "periodic"}


@pytest.fixture
def square2():
    """Unit square split into two triangles, all walls."""
    return build_uniform_mesh((0, 1, 0, 1), 1, 1, "two")


@pytest.fixture
def periodic8():
    return build_uniform_mesh((0, 1, 0, 1), 8, 8, "two", boundary=PERIODIC)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the test summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
