import numpy as np
import pytest

from poleloc import CellSpec, GrayImage
from poleloc.synth import generate_sample


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def default_spec():
    return CellSpec(seed=7)


@pytest.fixture(scope="session")
def sample0(default_spec):
    return generate_sample(default_spec, 0)


@pytest.fixture
def random_image(rng):
    return GrayImage(rng.integers(0, 256, (32, 32), dtype=np.uint8))
