import numpy as np
import pytest
from sklearn.metrics import average_precision_score, roc_auc_score

from conftest import random_record_batch
from cubcal.boundary import BoundaryConfig
from cubcal.metrics import (
    accuracy,
    aupr,
    auroc,
    avu,
    avu_counts,
    balanced_accuracy,
    bcce,
    calibration_report,
    delta_u,
    ece,
)
from cubcal.records import PredictionRecord
from oracles import (
    aupr_oracle,
    auroc_oracle,
    avu_oracle,
    bcce_oracle,
    delta_u_oracle,
    ece_oracle,
)

CFG = BoundaryConfig(gamma=0.9, k=3)


def rec(label, probs):
    z = np.log(np.asarray(probs, dtype=float))
    return PredictionRecord.from_mean_logits(label, z - z.max())


class TestBasic:
    def test_accuracy(self):
        recs = [rec(0, [0.8, 0.1, 0.1]), rec(1, [0.8, 0.1, 0.1])]
        assert accuracy(recs) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            accuracy([])

    def test_balanced_accuracy_none_when_class_absent(self):
        recs = [rec(0, [0.8, 0.1, 0.1]), rec(1, [0.1, 0.8, 0.1])]
        assert balanced_accuracy(recs) is None

    def test_balanced_accuracy_value(self):
        recs = [
            rec(0, [0.8, 0.1, 0.1]),
            rec(1, [0.1, 0.8, 0.1]),
            rec(2, [0.8, 0.1, 0.1]),  # wrong
            rec(2, [0.1, 0.1, 0.8]),
        ]
        assert balanced_accuracy(recs) == pytest.approx((1 + 1 + 0.5) / 3)


class TestAvU:
    def test_counts_and_rate(self):
        certain_right = rec(0, [0.98, 0.01, 0.01])
        uncertain_right = rec(0, [0.5, 0.3, 0.2])
        certain_wrong = rec(1, [0.98, 0.01, 0.01])
        uncertain_wrong = rec(1, [0.5, 0.3, 0.2])
        c = avu_counts([certain_right, uncertain_right, certain_wrong, uncertain_wrong], 0.325)
        assert (c.n_ac, c.n_au, c.n_ic, c.n_iu) == (1, 1, 1, 1)
        assert avu(c) == pytest.approx(0.5)

    def test_all_dependable_is_one(self):
        c = avu_counts([rec(0, [0.98, 0.01, 0.01]), rec(1, [0.5, 0.3, 0.2])], 0.325)
        assert avu(c) == pytest.approx(1.0)

    def test_threshold_validated(self):
        with pytest.raises(ValueError):
            avu_counts([], u_th=-1.0)


class TestDeltaU:
    def test_none_when_all_correct(self):
        assert delta_u([rec(0, [0.9, 0.05, 0.05])]) is None

    def test_sign(self):
        recs = [rec(0, [0.98, 0.01, 0.01]), rec(1, [0.5, 0.3, 0.2])]
        assert delta_u(recs) > 0


class TestOracleEquivalence:
    """Reduced-size version of the acceptance oracle sweep."""

    def test_all_metrics(self, rng):
        for trial in range(20):
            recs = random_record_batch(rng, n=50, mc=bool(trial % 2))
            assert avu(avu_counts(recs, 0.325)) == pytest.approx(
                avu_oracle(recs, 0.325), abs=1e-9
            )
            du, du_o = delta_u(recs), delta_u_oracle(recs)
            if du is None:
                assert du_o is None
            else:
                assert du == pytest.approx(du_o, abs=1e-9)
            assert ece(recs, 15) == pytest.approx(ece_oracle(recs, 15), abs=1e-9)
            weighted, _, _ = bcce(recs, CFG, 15)
            assert weighted == pytest.approx(bcce_oracle(recs, 0.9, 3, 15), abs=1e-9)

    def test_rank_metrics(self, rng):
        for _ in range(20):
            si = np.round(rng.normal(0, 1, 30), 1)
            so = np.round(rng.normal(0.5, 1, 25), 1)
            assert auroc(si, so) == pytest.approx(auroc_oracle(si, so), abs=1e-9)
            assert aupr(si, so) == pytest.approx(aupr_oracle(si, so), abs=1e-9)
            y = np.r_[np.zeros(30), np.ones(25)]
            s = np.r_[si, so]
            assert auroc(si, so) == pytest.approx(roc_auc_score(y, s), abs=1e-9)
            assert aupr(si, so) == pytest.approx(average_precision_score(y, s), abs=1e-9)


class TestRankMetricEdges:
    def test_identical_scores_auroc_half(self):
        assert auroc([1.0, 1.0], [1.0, 1.0]) == pytest.approx(0.5)

    def test_perfect_separation(self):
        assert auroc([0.0, 0.1], [1.0, 2.0]) == pytest.approx(1.0)
        assert aupr([0.0, 0.1], [1.0, 2.0]) == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            auroc([], [1.0])
        with pytest.raises(ValueError):
            aupr([1.0], [])


class TestBcceStructure:
    def test_sum_variant_is_per_sample_sum(self, rng):
        recs = random_record_batch(rng, n=30)
        from cubcal.boundary import u_ideal

        _, sum_variant, _ = bcce(recs, CFG, 15)
        expected = sum(abs(r.uncertainty - u_ideal(r.confidence, CFG)) for r in recs)
        assert sum_variant == pytest.approx(expected, abs=1e-9)

    def test_bin_counts_sum_to_n(self, rng):
        recs = random_record_batch(rng, n=40)
        _, _, bins = bcce(recs, CFG, 15)
        assert int(bins.counts.sum()) == 40
        assert len(bins.edges) == 16

    def test_boundary_perfect_batch_is_zero(self):
        # every sample exactly on its ideal branch
        recs = [rec(0, [0.95, 0.05, 1e-13]) for _ in range(10)]
        weighted, _, _ = bcce(recs, CFG, 15)
        assert weighted == pytest.approx(0.0, abs=1e-6)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            bcce([], CFG, 15)


class TestReport:
    def test_hand_built_batch(self):
        recs = [
            rec(0, [0.98, 0.01, 0.01]),   # accurate certain
            rec(0, [0.5, 0.3, 0.2]),      # accurate uncertain
            rec(1, [0.98, 0.01, 0.01]),   # inaccurate certain
            rec(1, [0.5, 0.3, 0.2]),      # inaccurate uncertain
            rec(2, [0.1, 0.1, 0.8]),
            rec(2, [0.2, 0.1, 0.7]),
        ]
        rep = calibration_report(recs, CFG)
        assert rep.accuracy == pytest.approx(4 / 6)
        assert rep.avu == pytest.approx(avu_oracle(recs, 0.325), abs=1e-12)
        assert rep.delta_u == pytest.approx(delta_u_oracle(recs), abs=1e-12)
        assert rep.ece == pytest.approx(ece_oracle(recs, 15), abs=1e-12)
        assert rep.bcce == pytest.approx(bcce_oracle(recs, 0.9, 3, 15), abs=1e-12)

    def test_to_dict_schema(self, rng):
        recs = random_record_batch(rng, n=20)
        d = calibration_report(recs, CFG).to_dict()
        assert set(d) == {
            "accuracy", "balanced_accuracy", "avu", "delta_u", "ece",
            "bcce", "bcce_sum_variant", "u_th", "m_bins", "bins",
        }
        assert len(d["bins"]["edges"]) == 16
        assert len(d["bins"]["counts"]) == 15

    def test_bins_csv(self, rng):
        recs = random_record_batch(rng, n=20)
        rows = calibration_report(recs, CFG).bins.csv_rows()
        assert rows[0] == "bin_lo,bin_hi,count,mean_u,mean_u_ideal"
        assert len(rows) == 16
