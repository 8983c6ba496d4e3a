import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bmk.catalog import Catalog  # noqa: E402


@pytest.fixture(scope="session")
def catalog():
    return Catalog()


_BODIES = {}


def body(name, dim, band_limit=None):
    key = (name, dim, band_limit)
    if key not in _BODIES:
        _BODIES[key] = Catalog().body(name, dim, band_limit)
    return _BODIES[key]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
