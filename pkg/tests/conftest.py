import numpy as np
import pytest

from ldvortex.params import Grid1D, LdParameters


@pytest.fixture
def desk() -> LdParameters:
    """The default desk configuration: N=2, L=1, p=0.5, kappa=1, H=3."""
    return LdParameters(2, 1.0, 0.5, 1.0, 3.0, 1e-3)


@pytest.fixture
def desk_grid(desk) -> Grid1D:
    return Grid1D.build(desk, dx=1.0 / 30.0)


@pytest.fixture
def coarse_grid(desk) -> Grid1D:
    return Grid1D.build(desk, dx=1.0 / 20.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
