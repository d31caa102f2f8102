import numpy as np
import pytest

from phaseless.signal_model import Field


def random_vec(rng, fld, n, scale=1.0):
    v = rng.standard_normal(n)
    if fld is Field.COMPLEX:
        v = v + 1j * rng.standard_normal(n)
    return v * scale


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


FIELDS = [Field.REAL, Field.COMPLEX]
