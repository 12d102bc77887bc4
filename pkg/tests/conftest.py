import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helmpert.geometry import Ellipse, Supercircle, fourier_coeffs  # noqa: E402


@pytest.fixture(scope="session")
def fb_super3():
    return fourier_coeffs(Supercircle(1.0, 3.0), 64)


@pytest.fixture(scope="session")
def fb_ellipse():
    return fourier_coeffs(Ellipse(1.0, 0.5), 64)


@pytest.fixture(scope="session")
def fb_ellipse3():
    return fourier_coeffs(Ellipse(1.0, 0.3), 64)
