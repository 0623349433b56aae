import mpmath
import pytest


@pytest.fixture(autouse=True)
def _restore_precision():
    """Each test starts at 53 bits and cannot leak a raised precision to the next."""
    old = mpmath.mp.prec
    mpmath.mp.prec = 53
    yield
    mpmath.mp.prec = old
