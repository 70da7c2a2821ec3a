import numpy as np
import pytest

from src.graph_core import build_circulant, build_path, kron_pair, spectral_interval, sym_normalized_laplacian
from src.poly_approx import Cube, MultiPoly


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cycle8():
    """L_sym of the 8-cycle."""
    return sym_normalized_laplacian(build_circulant(8, [1]))


@pytest.fixture
def small_circulant():
    """L_sym of C(10, {1, 2}) with its exact spectral interval."""
    L = sym_normalized_laplacian(build_circulant(10, [1, 2]))
    return L.with_interval(spectral_interval(L, "dense-eig"))


@pytest.fixture
def torus_pair():
    """Kronecker pair on C(6, {1}) x C(6, {1}), n = 36."""
    L = sym_normalized_laplacian(build_circulant(6, [1]))
    return kron_pair(L, L)


@pytest.fixture
def path_pair():
    """Kronecker pair on path(4) x path(3), n = 12."""
    return kron_pair(sym_normalized_laplacian(build_path(4)), sym_normalized_laplacian(build_path(3)))


@pytest.fixture
def random_poly(rng):
    """Factory for MultiPolys with uniform random Chebyshev coefficients."""

    def make(degrees, cube=None) -> MultiPoly:
        cube = cube or Cube.uniform((0.0, 2.0), len(degrees))
        return MultiPoly(rng.uniform(-1.0, 1.0, [m + 1 for m in degrees]), cube)

    return make
