import numpy as np
import pytest

from launcher.selftest import random_model
from Ressf.Operators import FramedModel


@pytest.fixture
def scalar_model():
    """H_r = r on C: a single resonance at r = lambda"""
    return FramedModel.from_arrays([[0.0]], [[1.0]], [[1.0]])


@pytest.fixture
def diag_model():
    """H_r = diag(r, 2)"""
    return FramedModel.from_arrays(np.diag([0.0, 2.0]), np.eye(2), np.diag([1.0, 0.0]))


@pytest.fixture
def double_model():
    """H_r = r on C^2: a resonance of multiplicity two at r = lambda"""
    return FramedModel.from_arrays(np.zeros((2, 2)), np.eye(2), np.eye(2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def random_models(rng):
    return [random_model(rng, dim=5, rank=2) for _ in range(3)]
