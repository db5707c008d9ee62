import numpy as np
import pytest

from invdecomp.groups import character_table
from invdecomp.kernels import builtin_kernel, make_interval_grid


@pytest.fixture(scope="session")
def grid64():
    return make_interval_grid(64)


@pytest.fixture(scope="session")
def watson64(grid64):
    return builtin_kernel("watson", grid64)


@pytest.fixture(scope="session")
def bridge64(grid64):
    return builtin_kernel("bridge", grid64)


@pytest.fixture(scope="session")
def z2_table(grid64):
    return character_table(grid64.action.group)


def rng(seed=0):
    return np.random.default_rng(seed)
