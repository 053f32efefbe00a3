from functools import lru_cache

import numpy as np
import pytest

from quadmarket.golden import solve_case


@lru_cache(maxsize=None)
def _case(D, r1, r2, mode="exhaustive"):
    return solve_case(D, r1, r2, mode)


@pytest.fixture(scope="session")
def scarf_case():
    """Cached solve of a Scarf case: ``scarf_case(D, r1, r2)``."""
    return _case


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
