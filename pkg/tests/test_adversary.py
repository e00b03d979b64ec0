import math

import numpy as np
import pytest

from advjam.adversary import (
    AttackConfig,
    AttackSaturationError,
    minimal_norm_attack,
    minimal_targeted_attack,
    oracle_gap_report,
    pgd_targeted,
    pgd_untargeted,
    write_gap_csv,
)
from advjam.constellation import DegenerateTargetError, min_distance, nearest_boundary_vector, targeted_vector
from advjam.demod import DemodModel

BOUNDARY_16 = 1 / math.sqrt(10)


def label(spec, text):
    return spec.labels.index(text)


class TestPgdUntargeted:
    def test_tiny_eps_fails(self, model16, qam16):
        for s in range(16):
            res = pgd_untargeted(model16, qam16.points[s], s, 0.01)
            assert not res.success
            assert res.predicted_after == s

    def test_large_eps_succeeds(self, model16, qam16):
        # a crossing exists: scan the circle of radius 0.5 with the model itself
        theta = np.linspace(0, 2 * np.pi, 720, endpoint=False)
        for s in range(16):
            ring = qam16.points[s] + 0.5 * np.exp(1j * theta)
            assert np.any(model16.predict(ring) != s)
            res = pgd_untargeted(model16, qam16.points[s], s, 0.5)
            assert res.success and res.predicted_after != s

    def test_ball_invariant(self, model16):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            x = complex(*rng.uniform(-1.2, 1.2, 2))
            eps = rng.uniform(0.01, 0.6)
            res = pgd_untargeted(model16, x, model16.predict(x), eps, AttackConfig(steps=8))
            assert res.norm <= eps * (1 + 1e-12)
            assert res.norm == pytest.approx(abs(res.delta))

    def test_success_soundness(self, model16):
        rng = np.random.default_rng(1)
        for _ in range(200):
            x = complex(*rng.uniform(-1.2, 1.2, 2))
            y = model16.predict(x)
            res = pgd_untargeted(model16, x, y, rng.uniform(0.05, 0.5))
            assert res.predicted_after == model16.predict(x + res.delta)
            assert res.success == (res.predicted_after != y)

    def test_deterministic(self, model16, qam16):
        cfg = AttackConfig(restarts=3, seed=9)
        a = pgd_untargeted(model16, qam16.points[6], 6, 0.3, cfg)
        b = pgd_untargeted(model16, qam16.points[6], 6, 0.3, cfg)
        assert a == b

    def test_bad_eps(self, model16):
        with pytest.raises(ValueError):
            pgd_untargeted(model16, 0j, 0, 0.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AttackConfig(steps=0)
        with pytest.raises(ValueError):
            AttackConfig(eps_max=0)
        with pytest.raises(ValueError):
            AttackConfig(loss="hinge")


class TestMinimalNorm:
    def test_norm_near_oracle(self, model16, qam16):
        for s in range(16):
            res = minimal_norm_attack(model16, qam16.points[s], s)
            assert res.success
            assert res.norm == pytest.approx(BOUNDARY_16, rel=0.10)

    def test_direction_at_unique_boundary(self, model16, qam16):
        # halfway toward the first neighbour the nearest boundary is unique
        for s in range(16):
            d = nearest_boundary_vector(s, qam16)
            x = qam16.points[s] + 0.5 * d
            res = minimal_norm_attack(model16, x, s)
            cos = (res.delta.real * d.real + res.delta.imag * d.imag) / (abs(res.delta) * abs(d))
            assert cos >= 0.95

    def test_halfway_halves_norm(self, model16, qam16):
        for s in range(16):
            clean = minimal_norm_attack(model16, qam16.points[s], s).norm
            d = nearest_boundary_vector(s, qam16)
            half = minimal_norm_attack(model16, qam16.points[s] + 0.5 * d, s).norm
            assert half == pytest.approx(0.5 * clean, rel=0.15)

    def test_bisection_resolution(self, model16, qam16):
        cfg = AttackConfig()
        res = minimal_norm_attack(model16, qam16.points[0], 0, cfg)
        step = cfg.eps_max * min_distance(qam16) / 2**cfg.bisection_iters
        below = max(res.norm - 2 * step, 1e-9)
        # PGD at a radius a couple of resolution steps smaller fails
        assert not pgd_untargeted(model16, qam16.points[0], 0, below, cfg).success

    def test_saturation(self, qam16):
        # a model that always answers 0 cannot be pushed anywhere
        flat = DemodModel(np.zeros((2, 4)), np.zeros(4), np.zeros((4, 16)),
                          np.r_[1.0, np.zeros(15)])
        with pytest.raises(AttackSaturationError):
            minimal_norm_attack(flat, qam16.points[0], 0, spec=qam16)

    def test_ce_loss_stalls_at_tied_boundaries(self, model16, qam16):
        # documents why the margin objective is the default
        corner = label(qam16, "1010")
        ce = minimal_norm_attack(model16, qam16.points[corner], corner, AttackConfig(loss="ce"))
        margin = minimal_norm_attack(model16, qam16.points[corner], corner)
        assert margin.norm < ce.norm


class TestPgdTargeted:
    def test_adjacent(self, model16, qam16):
        a, b = label(qam16, "1100"), label(qam16, "1000")
        res = pgd_targeted(model16, qam16.points[a], b, 0.4)
        assert res.success and res.predicted_after == b
        assert res.norm == pytest.approx(min_distance(qam16) / 2, rel=0.15)

    def test_diagonal(self, model16, qam16):
        a, b = label(qam16, "0101"), label(qam16, "1111")
        res = pgd_targeted(model16, qam16.points[a], b, 0.5)
        assert res.success and res.predicted_after == b
        assert res.norm == pytest.approx(min_distance(qam16) / math.sqrt(2), rel=0.15)

    def test_far_corner_fails(self, model16, qam16):
        a, b = label(qam16, "0000"), label(qam16, "1010")
        res = pgd_targeted(model16, qam16.points[a], b, 0.1)
        assert not res.success

    def test_degenerate(self, model16, qam16):
        with pytest.raises(DegenerateTargetError):
            pgd_targeted(model16, qam16.points[3], 3, 0.3)

    def test_minimal_targeted_matches_oracle(self, model16, qam16):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a, b = rng.choice(16, 2, replace=False)
            res = minimal_targeted_attack(model16, qam16.points[a], int(b))
            assert res.success and res.predicted_after == b
            assert res.norm == pytest.approx(abs(targeted_vector(int(a), int(b), qam16)), rel=0.10)


class TestOracleGap:
    @pytest.mark.parametrize("fixture,spec_name", [("model16", "qam16"), ("model4", "qpsk")])
    def test_ratios(self, request, fixture, spec_name):
        model, spec = request.getfixturevalue(fixture), request.getfixturevalue(spec_name)
        rows = oracle_gap_report(model, spec)
        assert len(rows) == spec.order
        for r in rows:
            assert 0.90 <= r.ratio <= 1.10, r
            assert r.cosine >= 0.95, r

    def test_csv(self, model4, qpsk, tmp_path):
        path = tmp_path / "gap.csv"
        write_gap_csv(oracle_gap_report(model4, qpsk), path)
        lines = path.read_bytes().split(b"\n")
        assert lines[0] == b"symbol,label,attack_norm,oracle_norm,ratio,cosine"
        assert len([ln for ln in lines[1:] if ln]) == 4
        assert b"\r" not in path.read_bytes()
