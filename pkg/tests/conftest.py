import numpy as np
import pytest

from ziclab import counterexamples as cx


@pytest.fixture(scope="session")
def recipe():
    return cx.default_recipe()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
