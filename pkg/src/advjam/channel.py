"""
AWGN generation and power/dB bookkeeping.

Random numbers come from numpy's PCG64 bit generator (seeded through
``np.random.default_rng``); Gaussian deviates use numpy's ziggurat
transform (``Generator.standard_normal``). Signal power is taken as the
average symbol power, which is 1 for every constellation built here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def db_to_ratio(db: float) -> float:
    return 10.0 ** (db / 10.0)


def ratio_to_db(ratio: float) -> float:
    return 10.0 * np.log10(ratio)


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float  # per-axis standard deviation
    seed: int = 0

    @property
    def power(self) -> float:
        return 2.0 * self.sigma**2

    @classmethod
    def from_snr_db(cls, snr_db: float, seed: int = 0, signal_power: float = 1.0) -> "NoiseSpec":
        """Noise spec whose total power sits ``snr_db`` below ``signal_power``.

        ``snr_db = inf`` gives a zero-noise spec.
        """
        if np.isinf(snr_db) and snr_db > 0:
            return cls(0.0, seed)
        p = signal_power / db_to_ratio(snr_db)
        return cls(float(np.sqrt(p / 2.0)), seed)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class PowerBudget:
    signal_power: float
    ratio_db: float

    @property
    def perturbation_power(self) -> float:
        if np.isinf(self.ratio_db):
            return 0.0 if self.ratio_db > 0 else np.inf
        return self.signal_power / db_to_ratio(self.ratio_db)


def budget_from_db(signal_power: float, ratio_db: float) -> PowerBudget:
    if not signal_power > 0:
        raise ValueError(f"signal power must be positive, got {signal_power}")
    return PowerBudget(float(signal_power), float(ratio_db))


def ratio_db_from_powers(signal_power: float, perturbation_power: float) -> float:
    """Inverse of :func:`budget_from_db`."""
    return ratio_to_db(signal_power / perturbation_power)


def complex_normal(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    """``n`` circular complex Gaussians with per-axis std ``sigma``."""
    z = rng.standard_normal((n, 2))
    return sigma * (z[:, 0] + 1j * z[:, 1])


def awgn(samples, noise: NoiseSpec) -> np.ndarray:
    """Return ``samples`` plus independent Gaussian noise on each axis."""
    if noise.sigma < 0:
        raise ValueError(f"noise sigma must be non-negative, got {noise.sigma}")
    x = np.asarray(samples, dtype=complex)
    if noise.sigma == 0:
        return x.copy()
    return x + complex_normal(noise.rng(), x.size, noise.sigma).reshape(x.shape)


def measure_power(samples) -> float:
    x = np.asarray(samples, dtype=complex)
    if x.size == 0:
        raise ValueError("cannot measure the power of an empty sequence")
    return float(np.mean(x.real**2 + x.imag**2))
