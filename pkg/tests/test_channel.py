import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from advjam.channel import (
    NoiseSpec,
    awgn,
    budget_from_db,
    measure_power,
    ratio_db_from_powers,
)


def phase_uniform_p(z, bins=36):
    counts, _ = np.histogram(np.angle(z) % (2 * np.pi), bins=bins, range=(0, 2 * np.pi))
    return chisquare(counts).pvalue


class TestAwgn:
    def test_zero_sigma_identity(self, qam16):
        x = qam16.points[np.arange(100) % 16]
        assert np.array_equal(awgn(x, NoiseSpec(0.0, 3)), x)

    def test_power(self):
        y = awgn(np.zeros(1_000_000, complex), NoiseSpec(0.1, 11))
        assert measure_power(y) == pytest.approx(0.02, abs=2e-4)

    def test_phase_uniform(self):
        y = awgn(np.zeros(1_000_000, complex), NoiseSpec(0.3, 5))
        assert phase_uniform_p(y) > 0.01

    def test_per_axis_sigma(self):
        y = awgn(np.zeros(200_000, complex), NoiseSpec(0.25, 2))
        assert np.std(y.real) == pytest.approx(0.25, rel=0.01)
        assert np.std(y.imag) == pytest.approx(0.25, rel=0.01)
        assert abs(np.corrcoef(y.real, y.imag)[0, 1]) < 0.01

    def test_deterministic(self, qam16):
        x = qam16.points[np.arange(1000) % 16]
        a = awgn(x, NoiseSpec(0.2, 42))
        b = awgn(x, NoiseSpec(0.2, 42))
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, awgn(x, NoiseSpec(0.2, 43)))

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            awgn(np.zeros(3, complex), NoiseSpec(-0.1))

    @pytest.mark.parametrize("n", [10_000, 1_000_000])
    def test_convergence_rate(self, n):
        sigma = 0.2
        y = awgn(np.zeros(n, complex), NoiseSpec(sigma, n))
        # |n|^2 is exponential with mean and std 2 sigma^2
        assert abs(measure_power(y) - 2 * sigma**2) < 4 * 2 * sigma**2 / math.sqrt(n)

    def test_from_snr(self):
        assert NoiseSpec.from_snr_db(20).power == pytest.approx(0.01)
        assert NoiseSpec.from_snr_db(math.inf).sigma == 0


class TestMeasurePower:
    def test_unit_constellation(self, qam16, qpsk):
        assert measure_power(qam16.points) == pytest.approx(1.0, abs=1e-12)
        assert measure_power(qpsk.points) == pytest.approx(1.0, abs=1e-12)

    def test_zeros(self):
        assert measure_power(np.zeros(10, complex)) == 0

    def test_single(self):
        assert measure_power([3 + 4j]) == 25

    def test_empty(self):
        with pytest.raises(ValueError):
            measure_power([])


class TestBudget:
    def test_equal_power(self):
        assert budget_from_db(1.0, 0.0).perturbation_power == 1.0

    def test_decade(self):
        assert budget_from_db(1.0, 10.0).perturbation_power == pytest.approx(0.1, abs=1e-15)

    def test_three_db(self):
        assert budget_from_db(1.0, 3.0).perturbation_power == pytest.approx(10 ** -0.3, abs=1e-15)
        assert budget_from_db(1.0, 3.0).perturbation_power == pytest.approx(0.501187, abs=1e-6)

    @pytest.mark.parametrize("p", [0.0, -1.0])
    def test_nonpositive_signal(self, p):
        with pytest.raises(ValueError):
            budget_from_db(p, 3.0)

    def test_inverse_grid(self):
        for db in np.arange(-20, 40.01, 0.5):
            b = budget_from_db(1.0, db)
            assert abs(ratio_db_from_powers(b.signal_power, b.perturbation_power) - db) < 1e-9

    @settings(max_examples=200)
    @given(st.floats(1e-3, 1e3), st.floats(-20, 40))
    def test_inverse_property(self, ps, db):
        b = budget_from_db(ps, db)
        assert abs(ratio_db_from_powers(ps, b.perturbation_power) - db) < 1e-9

    def test_infinite_ratio(self):
        assert budget_from_db(1.0, math.inf).perturbation_power == 0.0
