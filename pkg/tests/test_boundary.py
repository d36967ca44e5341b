import numpy as np
import pytest

from cubcal.boundary import (
    BoundaryConfig,
    boundary_curve,
    boundary_curve_csv_rows,
    confidence,
    entropy,
    feasible_span,
    invert_u_max,
    softmax,
    u_ideal,
    u_max,
    u_min,
    validate_logits,
    validate_probs,
)
from oracles import entropy_oracle, u_ideal_oracle, u_max_oracle, u_min_oracle

CFG = BoundaryConfig(gamma=0.9, k=3)


class TestValidation:
    def test_probs_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            validate_probs([0.5, 0.4])

    def test_probs_must_be_in_range(self):
        with pytest.raises(ValueError):
            validate_probs([1.2, -0.2])

    def test_probs_reject_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            validate_probs([np.nan, 1.0])

    def test_probs_reject_scalar_and_short(self):
        with pytest.raises(ValueError):
            validate_probs([1.0])
        with pytest.raises(ValueError):
            validate_probs(1.0)

    def test_logits_reject_inf(self):
        with pytest.raises(ValueError, match="non-finite"):
            validate_logits([np.inf, 0.0])

    def test_config_gamma_domain(self):
        with pytest.raises(ValueError):
            BoundaryConfig(gamma=0.2, k=3)  # below 1/k
        with pytest.raises(ValueError):
            BoundaryConfig(gamma=1.0, k=3)
        with pytest.raises(ValueError):
            BoundaryConfig(gamma=0.9, k=1)


class TestSoftmaxEntropy:
    def test_softmax_matches_direct_formula(self, rng):
        z = rng.normal(size=5)
        direct = np.exp(z) / np.exp(z).sum()
        assert np.allclose(softmax(z), direct, atol=1e-12)

    def test_softmax_shift_invariant_and_stable(self):
        z = np.array([1000.0, 1001.0, 999.0])
        p = softmax(z)
        assert np.all(np.isfinite(p))
        assert np.allclose(p, softmax(z - 1000.0), atol=1e-15)

    def test_entropy_uniform_is_log_k(self):
        for k in (2, 3, 7):
            assert entropy(np.full(k, 1.0 / k)) == pytest.approx(np.log(k), abs=1e-12)

    def test_entropy_one_hot_is_zero(self):
        assert entropy(np.array([1.0, 0.0, 0.0])) == pytest.approx(0.0, abs=1e-9)

    def test_entropy_matches_oracle(self, rng):
        for _ in range(20):
            p = rng.dirichlet(np.ones(4))
            assert entropy(p) == pytest.approx(entropy_oracle(p), abs=1e-9)

    def test_confidence_tie_breaks_low_index(self):
        label, p = confidence([0.4, 0.4, 0.2])
        assert label == 0 and p == pytest.approx(0.4)


class TestBounds:
    def test_u_min_matches_oracle(self, rng):
        for p in rng.uniform(1 / 3, 1, 50):
            assert u_min(p, 3) == pytest.approx(u_min_oracle(p), abs=1e-12)

    def test_u_max_matches_oracle(self, rng):
        for k in (2, 3, 5):
            for p in rng.uniform(1 / k, 1, 50):
                assert u_max(p, k) == pytest.approx(u_max_oracle(p, k), abs=1e-12)

    def test_binary_bounds_coincide(self, rng):
        for p in rng.uniform(0.5, 1, 50):
            assert u_min(p, 2) == pytest.approx(u_max(p, 2), abs=1e-12)

    def test_order_u_min_below_u_max(self, rng):
        for k in (3, 5, 10):
            p = rng.uniform(1 / k, 1, 1000)
            assert np.all(u_min(p, k) <= u_max(p, k) + 1e-12)

    def test_endpoints(self):
        for k in (2, 3, 5):
            assert u_max(1.0, k) == pytest.approx(0.0, abs=1e-9)
            assert u_min(1.0, k) == pytest.approx(0.0, abs=1e-9)
            assert u_max(1.0 / k, k) == pytest.approx(np.log(k), abs=1e-9)

    def test_span_formula(self, rng):
        for k in (2, 3, 5):
            p = rng.uniform(1 / k, 1, 100)
            assert np.allclose(feasible_span(p, k), (1 - p) * np.log(k - 1), atol=1e-12)

    def test_domain_check(self):
        with pytest.raises(ValueError, match="confidence"):
            u_max(0.2, 3)
        with pytest.raises(ValueError):
            u_min(1.1, 3)

    def test_feasibility_samples(self, rng):
        # the large-scale version runs in the acceptance suite
        for k in (2, 3, 5, 10):
            p = rng.dirichlet(np.ones(k), size=2000)
            p_hat = p.max(axis=1)
            h = entropy(p, axis=-1)
            assert np.all(h >= u_min(p_hat, k) - 1e-9)
            assert np.all(h <= u_max(p_hat, k) + 1e-9)


class TestIdealAndInverse:
    def test_branch_switch_at_gamma(self):
        assert u_ideal(0.95, CFG) == pytest.approx(u_min(0.95, 3), abs=1e-12)
        assert u_ideal(0.85, CFG) == pytest.approx(u_max(0.85, 3), abs=1e-12)
        # the threshold itself takes the upper branch
        assert u_ideal(0.9, CFG) == pytest.approx(u_max(0.9, 3), abs=1e-12)

    def test_matches_oracle(self, rng):
        for p in rng.uniform(1 / 3, 1, 50):
            assert u_ideal(p, CFG) == pytest.approx(u_ideal_oracle(p, 0.9, 3), abs=1e-12)

    def test_invert_u_max_roundtrip(self, rng):
        for k in (2, 3, 5):
            for eta in rng.uniform(0.05, np.log(k) - 0.05, 10):
                p = invert_u_max(eta, k)
                assert u_max(p, k) == pytest.approx(eta, abs=1e-7)

    def test_invert_domain(self):
        with pytest.raises(ValueError, match="eta"):
            invert_u_max(0.0, 3)
        with pytest.raises(ValueError, match="eta"):
            invert_u_max(np.log(3), 3)


class TestCurveExport:
    def test_sample_count_and_range(self):
        curve = boundary_curve(CFG, 11)
        assert len(curve) == 11
        assert curve[0].confidence == pytest.approx(1 / 3)
        assert curve[-1].confidence == pytest.approx(1.0)
        for s in curve:
            assert s.u_min - 1e-12 <= s.u_ideal <= s.u_max + 1e-12

    def test_csv_rows(self):
        rows = boundary_curve_csv_rows(CFG, 5)
        assert rows[0] == "confidence,u_min,u_max,u_ideal"
        assert len(rows) == 6
        assert all(len(r.split(",")) == 4 for r in rows[1:])

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            boundary_curve(CFG, 1)
