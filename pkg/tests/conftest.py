import numpy as np
import pytest


@pytest.fixture
def trust3():
    # three agents: self-weights 1/3, 1/2, 3/4
    return np.array([[1 / 3, 1 / 3, 1 / 3], [0.5, 0.5, 0.0], [0.0, 0.25, 0.75]])


@pytest.fixture
def rates3():
    return np.array([0.3, 0.5, 0.7])


@pytest.fixture
def pair2():
    # two-agent weights and rates whose averaging map is instantly rank one
    return np.array([[0.6, 0.4], [0.3, 0.7]]), np.array([0.4, 0.2])


def random_stochastic(rng, n, diag_boost=1.0):
    a = rng.random((n, n)) + np.diag(rng.random(n) * diag_boost)
    return a / a.sum(axis=1, keepdims=True)
