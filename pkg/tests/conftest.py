import numpy as np
import pytest

import fraclab as fl


@pytest.fixture(scope="session")
def unit_ball():
    return fl.ConvexDomain.ball(1.0)


@pytest.fixture(scope="session")
def coarse_grid(unit_ball):
    return fl.build_grid(unit_ball, 0.1, pad=4)


@pytest.fixture(scope="session")
def coarse_dirs():
    return fl.DirectionSet(16)


@pytest.fixture(scope="session")
def coarse_engine(coarse_grid, coarse_dirs):
    return fl.OperatorEngine(coarse_grid, coarse_dirs, 0.75)


def rng_for(name, salt=0):
    import zlib

    return np.random.default_rng(zlib.crc32(f"{name}:{salt}".encode()))
