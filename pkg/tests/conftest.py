import pytest

from autogap import constructions as cons
from autogap.reeb import reeb_tree
from autogap.surface import AnnulusChart


@pytest.fixture(scope="session")
def unit_chart():
    return AnnulusChart.unit_area()


@pytest.fixture(scope="session")
def wide_chart():
    return AnnulusChart.wide()


@pytest.fixture(scope="session")
def K256():
    return cons.compact_height_field((256, 256))


@pytest.fixture(scope="session")
def psi256():
    return cons.plateau_field((256, 256))


@pytest.fixture(scope="session")
def psi_tree256(psi256):
    return reeb_tree(psi256)
