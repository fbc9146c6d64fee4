"""Shared fixtures. Trained models are expensive (~45 s each), so every
full training run lives here as a session-scoped fixture reused by the
behavioral tests and the acceptance suite."""

import time
from types import SimpleNamespace

import numpy as np
import pytest

from noisereg.training import TrainConfig, train


def _timed_train(config):
    start = time.perf_counter()
    params, log = train(config)
    return SimpleNamespace(
        params=params, log=log, seconds=time.perf_counter() - start
    )


@pytest.fixture(scope="session")
def trained_black():
    return _timed_train(TrainConfig(mode="pure_color", color=(0, 0, 0), seed=6))


@pytest.fixture(scope="session")
def trained_orange():
    return _timed_train(TrainConfig(mode="pure_color", color=(255, 128, 0), seed=6))


@pytest.fixture(scope="session")
def trained_grey():
    return _timed_train(
        TrainConfig(mode="pure_color", color=(128, 128, 128), seed=4, probe_every=1)
    )


@pytest.fixture(scope="session")
def trained_red():
    return _timed_train(TrainConfig(mode="pure_color", color=(255, 0, 0), seed=21))


@pytest.fixture(scope="session")
def trained_palette():
    return _timed_train(TrainConfig(mode="palette", seed=12))


@pytest.fixture(scope="session")
def trained_noise_fc():
    return _timed_train(TrainConfig(mode="noise", sigma=1.0, seed=14))


@pytest.fixture(scope="session")
def trained_noise_fc_no_in():
    return _timed_train(
        TrainConfig(mode="noise", sigma=1.0, seed=14, disable_instance_norm=True)
    )


def finite_difference(f, x, step=1e-3):
    """Central finite-difference gradient of scalar f at x (elementwise)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f(x)
        flat[i] = orig - step
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return grad


def relative_error(a, b):
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-8)
    return np.max(np.abs(a - b)) / denom
