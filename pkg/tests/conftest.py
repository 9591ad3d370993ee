import numpy as np
import pytest

from simcurv import systems as ss
from simcurv import ode


@pytest.fixture(scope="session")
def ds():
    return ss.make_system("davis_skodje", {"gamma": 3.5})


@pytest.fixture(scope="session")
def kuehn():
    return ss.make_system("kuehn_nonlinear", {"eps": 0.01})


@pytest.fixture(scope="session")
def enzyme():
    return ss.make_system("enzyme_mmh", {"eps": 0.01, "kappa": 1.5, "lambda": 0.5})


@pytest.fixture(scope="session")
def enzyme_int():
    # parameters of the curvature-integral study
    return ss.make_system("enzyme_mmh", {"eps": 0.5, "kappa": 1.0, "lambda": 0.5})


@pytest.fixture(scope="session")
def ds21():
    return ss.make_system("ds_2_1", {"gamma": 3.5})


@pytest.fixture(scope="session")
def m32():
    return ss.make_system("model_3_2", {"eps": 0.01})


@pytest.fixture(scope="session")
def all_systems(ds, kuehn, enzyme, ds21, m32):
    return (ds, kuehn, enzyme, ds21, m32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def kernel_warm(ds):
    # first kernel call triggers numba compilation; keep it out of timings
    ode.integrate(ds, [1.0, 0.5], (0.0, 0.01))
    return True
