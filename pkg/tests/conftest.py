import numpy as np
import pytest

from koopman_sensing import TimeSeriesMatrix


def damped_pair_signal(p=4, n=600, dt=0.02, modes=((0.5, 0.02), (2.0, 0.01)), seed=0):
    """Noiseless sum of free-decay modes with random shapes and phases.

    Exactly linear with state dimension ``2 * len(modes)``.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n) * dt
    y = np.zeros((p, n))
    shapes = rng.standard_normal((p, len(modes)))
    for j, (f, z) in enumerate(modes):
        wn = 2 * np.pi * f
        q = np.exp(-z * wn * t) * np.cos(wn * np.sqrt(1 - z * z) * t + rng.uniform(0, 2 * np.pi))
        y += np.outer(shapes[:, j], q)
    return TimeSeriesMatrix(y, dt), shapes


@pytest.fixture
def two_mode():
    return damped_pair_signal()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def linear_system_signal(p=4, n=600, dt=0.02, modes=((0.5, 0.02), (2.0, 0.01)), seed=0):
    """Output of a random-basis linear system with the given modal poles.

    The observation matrix mixes real and imaginary parts of each pair, so
    the physical mode shapes are genuinely complex and a single snapshot
    determines all amplitudes when ``p >= 2 * len(modes)``.
    """
    rng = np.random.default_rng(seed)
    blocks = []
    for f, z in modes:
        lam = complex(-z * 2 * np.pi * f, 2 * np.pi * f * np.sqrt(1 - z * z))
        mu = np.exp(lam * dt)
        blocks.append(np.array([[mu.real, -mu.imag], [mu.imag, mu.real]]))
    k = 2 * len(modes)
    a = np.zeros((k, k))
    for j, b in enumerate(blocks):
        a[2 * j:2 * j + 2, 2 * j:2 * j + 2] = b
    c = rng.standard_normal((p, k))
    state = rng.standard_normal(k)
    y = np.empty((p, n))
    for i in range(n):
        y[:, i] = c @ state
        state = a @ state
    return TimeSeriesMatrix(y, dt)
