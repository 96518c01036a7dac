import pytest

from qndsim.params import db_to_gain, reference_params


@pytest.fixture
def ref():
    return reference_params()


@pytest.fixture
def s12():
    return db_to_gain(12.0)
