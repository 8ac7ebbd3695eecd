import numpy as np
import pytest

from ttakit.data import synthetic_dataset
from ttakit.harness import train_source_model


def fd_gradient(f, x, eps=1e-5):
    """Central finite differences of scalar-valued f() w.r.t. array x (in place)."""
    g = np.zeros(x.shape, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + eps
        fp = f()
        x[idx] = orig - eps
        fm = f()
        x[idx] = orig
        g[idx] = (fp - fm) / (2 * eps)
    return g


def grad_close(analytic, numeric, rtol=1e-4):
    """Max-norm relative agreement, the gradcheck criterion used throughout."""
    scale = max(np.max(np.abs(numeric)), 1e-8)
    return np.max(np.abs(analytic - numeric)) / scale <= rtol


@pytest.fixture(scope="session")
def toy_dataset():
    return synthetic_dataset(600, seed=0)


@pytest.fixture(scope="session")
def toy_test_set():
    return synthetic_dataset(192, seed=1_000_003)


@pytest.fixture(scope="session")
def toy_model(toy_dataset):
    """A quickly trained source model shared by the unit tests."""
    model, history = train_source_model(toy_dataset, "cnn-bn-small", seed=0, epochs=4)
    assert history["final_train_accuracy"] > 0.6
    return model
