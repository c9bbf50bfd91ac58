import pytest

from vdfrate.group_arith import RsaGroup


@pytest.fixture(scope="session")
def g128():
    return RsaGroup.generate(128, seed=11)


@pytest.fixture(scope="session")
def g256():
    return RsaGroup.generate(256, seed=12)


@pytest.fixture(scope="session")
def g512():
    return RsaGroup.generate(512, seed=13)


@pytest.fixture(scope="session")
def g1024():
    return RsaGroup.generate(1024, seed=14)
