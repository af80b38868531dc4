import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20250808)


def random_pd(rng, d, scale=1.0):
    """Random symmetric positive definite matrix, well conditioned."""
    a = rng.standard_normal((d, d))
    return scale * (a @ a.T + d * np.eye(d))
