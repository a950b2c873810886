import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from squaredot.basis import Geometry, Material  # noqa: E402
from squaredot.ci import solve_dot  # noqa: E402


@pytest.fixture(scope="session")
def gaas():
    return Material()


@pytest.fixture(scope="session")
def dots(gaas):
    """Default-basis solutions at 100, 200 and 400 nm."""
    return {L: solve_dot(Geometry(L), gaas, n_max=8, check_convergence=True)
            for L in (100.0, 200.0, 400.0)}
