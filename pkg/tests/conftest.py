import numpy as np
import pytest
from hypothesis import settings

from tachyon.analytic import eigenspinor
from tachyon.core import gaussian_packet, make_grid
from tachyon.evolution import EvolutionConfig, evolve
from tachyon.params import DiracParams

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid():
    return make_grid(1024, 40.0)


@pytest.fixture(scope="session")
def tachyon_2():
    return DiracParams(2.0, "tachyon")


@pytest.fixture(scope="session")
def separable_run(grid, tachyon_2):
    """Separable packet p_o=3.5, m=2 tachyon, evolved to t=2."""
    field = gaussian_packet(grid, 3.5, 1.0, eigenspinor(3.5, tachyon_2, +1))
    return evolve(field, EvolutionConfig(tachyon_2, dt=5e-4, t_final=2.0, sample_stride=20))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
