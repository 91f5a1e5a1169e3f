import functools

import pytest

from mncodes.protograph import lift, preset


@functools.lru_cache(maxsize=None)
def _code(name, ell, seed=0):
    return lift(preset(name), ell, seed=seed)


@pytest.fixture(scope="session")
def code1200():
    """The n = 1200 lift of the rate-1/2 preset used throughout the finite-length checks."""
    return _code("b12", 300)


@pytest.fixture(scope="session")
def small_code():
    return _code("b12", 24)


@pytest.fixture(scope="session")
def tiny_code():
    # ell = 2 cannot host three distinct shifts, so parallel circulants collapse mod 2
    return lift(preset("b12"), 2, allow_collapse=True)
