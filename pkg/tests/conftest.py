import numpy as np
import pytest

from korncurl.mesh import build_box_mesh, build_lshape_mesh


@pytest.fixture(scope="session")
def cube1():
    return build_box_mesh(subdivisions=1)


@pytest.fixture(scope="session")
def cube2():
    return build_box_mesh(subdivisions=2)


@pytest.fixture(scope="session")
def cube3():
    return build_box_mesh(subdivisions=3)


@pytest.fixture(scope="session")
def lshape2():
    return build_lshape_mesh(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
