from importlib.resources import files

import numpy as np
import pytest

from fibrelin.normal_form import build_normal_form
from fibrelin.system import load_system, parse_system

DATA = files("fibrelin") / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def example():
    return load_system(DATA / "example.fl")


@pytest.fixture(scope="session")
def example_nf(example):
    return build_normal_form(example)


@pytest.fixture(scope="session")
def nocomp():
    return load_system(DATA / "example_nocomplement.fl")


@pytest.fixture(scope="session")
def nocomp_nf(nocomp):
    return build_normal_form(nocomp)


@pytest.fixture(scope="session")
def identity_sys():
    """Phi = (x1, x2) with complement x3, so Lambda is the identity map."""
    return parse_system("""
system "identity"
states x1 x2 x3
input u
f = [x2, x3, x1]
g = [0, 1, 0]
h = x1
complement = [x3]
""")


@pytest.fixture(scope="session")
def double_integrator():
    return parse_system("""
system "double-integrator"
states x1 x2
input u
f = [x2, 0]
g = [0, 1]
h = x1
""")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
