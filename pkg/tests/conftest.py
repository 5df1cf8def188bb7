import pytest

from rydgate import load_setting


@pytest.fixture(scope="session")
def s1():
    return load_setting("S1")


@pytest.fixture(scope="session")
def s2():
    return load_setting("S2")
