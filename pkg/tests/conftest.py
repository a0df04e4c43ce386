import numpy as np
import pytest

from d4.embedkit import synthetic


@pytest.fixture
def worked_matrix():
    """The hand-checkable 4 x 3 matrix used across projection tests."""
    return np.array(
        [
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
        ]
    )


@pytest.fixture
def worked_perp():
    return np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
        ]
    )


@pytest.fixture(scope="session")
def planted():
    """Default planted embedding shared by embedding-metric tests."""
    return synthetic.make_planted_embedding(seed=0)


def random_orthonormal(rng, p, k):
    """k orthonormal rows in R^p drawn from a seeded generator."""
    q, _ = np.linalg.qr(rng.standard_normal((p, k)))
    return q[:, :k].T
