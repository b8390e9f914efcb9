import numpy as np
import pytest
from hypothesis import settings

from superlens.experiment import PARAMETER_ROWS
from superlens.forward import Grid

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SMALL = Grid(64, 33, 33)


@pytest.fixture(scope="session")
def small_grid():
    return SMALL


@pytest.fixture(params=sorted(PARAMETER_ROWS), ids=lambda r: f"row{r}")
def row_params(request):
    return PARAMETER_ROWS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
