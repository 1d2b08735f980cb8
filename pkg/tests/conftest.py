"""
Shared fixtures: monodromy archives are expensive, so each model is solved once per session
"""

import pytest

from mlrank_sdk.models import DataMatrix, RankModel
from mlrank_sdk.monodromy import MonodromyOptions, monodromy_solve

EXAMPLE_SYMMETRIC = [10, 9, 1, 21, 3, 7]

EXAMPLE_GENERAL = [[2084, 1, 1, 1, 4],
                   [4, 23587, 5, 3, 1],
                   [6, 3, 41224, 3, 2],
                   [4, 6, 2, 8734, 4]]


@pytest.fixture(scope="session")
def archive_332():
    return monodromy_solve(RankModel(3, 3, 2), MonodromyOptions(threads=1), rng_seed=0)


@pytest.fixture(scope="session")
def archive_sym32():
    return monodromy_solve(RankModel(3, 3, 2, symmetric=True), MonodromyOptions(threads=1), rng_seed=0)


@pytest.fixture(scope="session")
def archive_331():
    return monodromy_solve(RankModel(3, 3, 1), MonodromyOptions(threads=1), rng_seed=0)


@pytest.fixture
def symmetric_data():
    return DataMatrix(EXAMPLE_SYMMETRIC, symmetric=True)


@pytest.fixture
def general_data():
    return DataMatrix([[3, 7, 2], [5, 1, 8], [4, 6, 9]])


@pytest.fixture
def example_data():
    """The 4 x 5 table whose EM maxima are reproduced"""
    return DataMatrix(EXAMPLE_GENERAL)
