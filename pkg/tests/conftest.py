import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hpsig.loops import AlgebraElement
from hpsig.models import suspension_model

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def circle():
    return suspension_model((0,), 1).complex


@pytest.fixture(scope="session")
def circle_model():
    return suspension_model((0,), 1)


@st.composite
def loop_matrices(draw, rows=None, cols=None, max_band=2, max_dim=3):
    r = rows if rows is not None else draw(st.integers(1, max_dim))
    c = cols if cols is not None else draw(st.integers(1, max_dim))
    band = draw(st.integers(0, max_band))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((2 * band + 1, r, c)) + 1j * rng.standard_normal((2 * band + 1, r, c))
    return AlgebraElement(coeffs)


def gaussian_integer_loop(rng, rows, cols, band=1, amplitude=3):
    """Loop matrix with small Gaussian-integer coefficients, so products are exact in floating point."""
    shape = (2 * band + 1, rows, cols)
    return AlgebraElement(rng.integers(-amplitude, amplitude + 1, shape)
                          + 1j * rng.integers(-amplitude, amplitude + 1, shape))
