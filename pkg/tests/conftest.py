import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def exp1():
    from escape_lab import make_map
    return make_map("exp_scaled", {"lambda": 1})


@pytest.fixture(scope="session")
def square():
    from escape_lab import make_map
    return make_map("poly_exp", {"p": [0, 0, 1]})


def monomial(d):
    from escape_lab import make_map
    return make_map("poly_exp", {"p": [0] * d + [1]})
