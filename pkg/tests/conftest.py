import numpy as np
import pytest

from advjam.constellation import build_qam
from advjam.demod import train_demodulator


@pytest.fixture(scope="session")
def qam16():
    return build_qam(16)


@pytest.fixture(scope="session")
def qpsk():
    return build_qam(4)


@pytest.fixture(scope="session")
def model16(qam16):
    return train_demodulator(qam16, seed=0)


@pytest.fixture(scope="session")
def model4(qpsk):
    return train_demodulator(qpsk, seed=0)


def brute_nearest(x, points):
    """Exhaustive scan; strict < keeps the lowest index on ties."""
    best, best_d = 0, np.inf
    for k, p in enumerate(points):
        d = (x.real - p.real) ** 2 + (x.imag - p.imag) ** 2
        if d < best_d:
            best, best_d = k, d
    return best
