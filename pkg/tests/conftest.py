"""Shared fixtures: the truncated state space is immutable, build it once."""

import numpy as np
import pytest

from tricav.space import build_state_space


@pytest.fixture(scope="session")
def space():
    return build_state_space(max_excitation=1, per_mode_cap=1)


@pytest.fixture()
def rng():
    return np.random.default_rng(20230817)


def random_density(rng, dim: int) -> np.ndarray:
    """A full-rank random density matrix (Wishart, normalized)."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
