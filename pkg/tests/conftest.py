import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_assignment(rng, n, m):
    """Random (bmu, second) pairs with bmu != second."""
    from dconn.vq import BmuAssignment

    bmu = rng.integers(0, m, size=n)
    second = (bmu + rng.integers(1, m, size=n)) % m
    return BmuAssignment(bmu, second)


def random_codebook(rng, m, d=2):
    from dconn.vq import Codebook

    return Codebook(rng.normal(size=(m, d)))
