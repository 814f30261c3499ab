import numpy as np
import pytest

from polyfock.basis import TruncationSpec


@pytest.fixture(scope="session")
def desk():
    """The desk-scale truncation: 6 levels, 64 degrees, margins 4 and 8."""
    return TruncationSpec(6, 64, 4, 8)


@pytest.fixture(scope="session")
def small():
    return TruncationSpec(4, 24, 2, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
