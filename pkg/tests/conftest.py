import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


def random_spd(rng, n, cond=10.0):
    A = rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(A)
    eig = np.exp(rng.uniform(0, np.log(cond), n))
    return (Q * eig) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def spd():
    return random_spd

