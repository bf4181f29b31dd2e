import numpy as np
import pytest

from kraussim import models


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)


@pytest.fixture
def pauli_spec():
    return models.build_model("pauli-xx-zz")


@pytest.fixture
def qho_spec():
    return models.build_model("qho-damped")


@pytest.fixture
def schwinger_spec():
    return models.build_model("schwinger-jz")


@pytest.fixture
def initial_states():
    return models.benchmark_initial_states()


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def align_phase(u, reference):
    """Rotate u by a global phase (magnitude untouched) to match reference."""
    idx = np.unravel_index(np.abs(reference).argmax(), reference.shape)
    ratio = reference[idx] / u[idx]
    return u * (ratio / abs(ratio))
