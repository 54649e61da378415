import pytest
from hypothesis import HealthCheck, settings

from fracheat.constants import FracParams
from fracheat.discrete import assemble_operator, build_radial_grid
from helpers import ACCEPTANCE

settings.register_profile(
    "fracheat",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("fracheat")


@pytest.fixture(scope="session")
def p3():
    return FracParams(3, 0.5)


@pytest.fixture(scope="session")
def grid64(p3):
    return build_radial_grid(1.0, 64, N=3)


@pytest.fixture(scope="session")
def op64(grid64, p3):
    return assemble_operator(grid64, p3)


@pytest.fixture(scope="session")
def opg64(grid64, p3):
    return assemble_operator(grid64, p3, 0.3)


@pytest.fixture(scope="session")
def ladder(p3):
    """Uniform grids and plain operators for M in 128..1024, built once."""
    out = {}
    for M in (128, 256, 512, 1024):
        g = build_radial_grid(1.0, M, N=3)
        out[M] = (g, assemble_operator(g, p3))
    return out


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[tag]
        terminalreporter.write_line(f"{tag}: {'PASS' if ok else 'FAIL'}  {detail}")
