import numpy as np
import pytest

from lattice_corr.circulant import CouplingVector, localized_square_root


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=["nn", "example1", "example2"])
def preset(request):
    c = CouplingVector.preset(request.param)
    return request.param, c, localized_square_root(c)
