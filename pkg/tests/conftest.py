import numpy as np
import pytest

from bmcnorm.model import build_instance, figure1_model, validate_model


@pytest.fixture(scope="session")
def fig1():
    return figure1_model()


@pytest.fixture(scope="session")
def fig1_30(fig1):
    return build_instance(fig1, 30)


def random_model(rng, K):
    """A random valid model with entries bounded away from zero."""
    while True:
        p = rng.uniform(0.05, 1.0, size=(K, K))
        p /= p.sum(axis=1, keepdims=True)
        if np.linalg.svd(p, compute_uv=False)[-1] > 1e-3:
            break
    alpha = rng.uniform(0.2, 1.0, size=K)
    alpha /= alpha.sum()
    return validate_model(alpha, p)
