import numpy as np
import pytest

from contactkit.models import load_model

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def planar():
    return load_model("planar_parabola")


@pytest.fixture(scope="session")
def cusp():
    return load_model("cusp_normal_form")


@pytest.fixture(scope="session")
def three():
    return load_model("three_component")


@pytest.fixture(scope="session")
def mitotic():
    return {face: load_model("mitotic", face=face) for face in ("X=0", "X=1", "M=0", "M=1")}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
