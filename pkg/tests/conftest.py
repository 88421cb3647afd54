import numpy as np
import pytest

from tests.helpers import c1_game, c2_game


@pytest.fixture
def c1():
    return c1_game()


@pytest.fixture
def c2():
    return c2_game()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
