import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_record_batch
from cubcal.cli import main, round_sig
from cubcal.records import write_logit_dump

FAST_CONFIG = {
    "data": {"n_per_class": 60},
    "train": {"epochs": 3, "mc_infer": 5, "hidden": 8},
    "loss": {"beta": 0.1, "warmup_epochs": 1},
}


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "run.json"
    path.write_text(json.dumps(FAST_CONFIG))
    return path


@pytest.fixture(scope="module")
def train_dir(tmp_path_factory, config_path):
    out = tmp_path_factory.mktemp("train")
    assert main(["train", "--config", str(config_path), "--out", str(out)]) == 0
    return out


class TestRounding:
    def test_six_significant_digits(self):
        assert round_sig(0.123456789) == 0.123457
        assert round_sig({"a": [1.9999999999, "s"]}) == {"a": [2.0, "s"]}
        assert round_sig(3) == 3


class TestBoundary:
    def test_writes_csv(self, tmp_path):
        out = tmp_path / "boundary.csv"
        assert main(["boundary", "--n-points", "21", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "confidence,u_min,u_max,u_ideal"
        assert len(lines) == 22

    def test_directory_out(self, tmp_path):
        assert main(["boundary", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "boundary.csv").exists()


class TestSynth:
    def test_writes_dataset_and_splits(self, tmp_path, config_path):
        assert main(["synth", "--config", str(config_path), "--out", str(tmp_path)]) == 0
        full = (tmp_path / "dataset.csv").read_text().splitlines()
        assert len(full) == 1 + 3 * 60
        n = {name: len((tmp_path / f"{name}.csv").read_text().splitlines()) - 1
             for name in ("train", "val", "test")}
        assert n["train"] + n["val"] + n["test"] == 180
        assert n["test"] == 18


class TestTrain:
    def test_artifacts(self, train_dir):
        for name in ("checkpoint.json", "trace.json", "val_dump.jsonl",
                     "test_dump.jsonl", "report.json"):
            assert (train_dir / name).exists()
        report = json.loads((train_dir / "report.json").read_text())
        assert 0.0 <= report["accuracy"] <= 1.0
        trace = json.loads((train_dir / "trace.json").read_text())
        assert len(trace["epochs"]) == 3

    def test_deterministic_reruns_byte_identical(self, tmp_path, config_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["train", "--config", str(config_path), "--out", str(out)]) == 0
            outs.append(out)
        for fname in ("report.json", "trace.json", "test_dump.jsonl", "checkpoint.json"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


class TestEval:
    def test_report_and_bins(self, tmp_path, train_dir, config_path):
        assert main(["eval", "--dump", str(train_dir / "test_dump.jsonl"),
                     "--config", str(config_path), "--out", str(tmp_path),
                     "--bins-csv"]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert "bcce" in report and "avu" in report
        assert (tmp_path / "bins.csv").read_text().startswith("bin_lo,bin_hi")


class TestCalibrate:
    def test_reports_and_invariant_accuracy(self, tmp_path, train_dir, config_path):
        assert main(["calibrate", "--dump", str(train_dir / "test_dump.jsonl"),
                     "--config", str(config_path), "--out", str(tmp_path)]) == 0
        temps = json.loads((tmp_path / "temperature_pair.json").read_text())
        assert temps["t_high"] > 0 and temps["t_low"] > 0
        before = json.loads((tmp_path / "report_before.json").read_text())
        after = json.loads((tmp_path / "report_after.json").read_text())
        assert before["accuracy"] == after["accuracy"]


class TestOod:
    def _dumps(self, tmp_path, rng, shift):
        id_recs = random_record_batch(rng, n=30)
        ood_recs = random_record_batch(rng, n=30)
        if shift:  # make OOD maximally uncertain
            ood_recs = [type(r).from_mean_logits(r.label, np.zeros(3), r.record_id)
                        for r in ood_recs]
        id_path, ood_path = tmp_path / "id.jsonl", tmp_path / "ood.jsonl"
        write_logit_dump(id_path, id_recs)
        write_logit_dump(ood_path, ood_recs)
        return id_path, ood_path

    def test_scores_both_directions(self, tmp_path, rng):
        id_path, ood_path = self._dumps(tmp_path, rng, shift=True)
        assert main(["ood", "--id-dump", str(id_path), "--ood-dump", str(ood_path),
                     "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "ood_report.json").read_text())
        assert set(report["before"]) == {"entropy", "neg_confidence"}
        assert report["before"]["entropy"]["auroc"] > 0.9

    def test_identical_dumps_are_chance(self, tmp_path, rng):
        id_path, _ = self._dumps(tmp_path, rng, shift=False)
        assert main(["ood", "--id-dump", str(id_path), "--ood-dump", str(id_path),
                     "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "ood_report.json").read_text())
        assert report["before"]["entropy"]["auroc"] == pytest.approx(0.5, abs=1e-9)

    def test_workers_flag_preserves_output(self, tmp_path, rng):
        id_path, ood_path = self._dumps(tmp_path, rng, shift=True)
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        out1.mkdir(), out2.mkdir()
        assert main(["ood", "--id-dump", str(id_path), "--ood-dump", str(ood_path),
                     "--out", str(out1), "--workers", "1"]) == 0
        assert main(["ood", "--id-dump", str(id_path), "--ood-dump", str(ood_path),
                     "--out", str(out2), "--workers", "4"]) == 0
        assert (out1 / "ood_report.json").read_bytes() == (out2 / "ood_report.json").read_bytes()

    def test_k_mismatch_is_config_error(self, tmp_path, rng):
        id_recs = random_record_batch(rng, n=5, k=3)
        ood_recs = random_record_batch(rng, n=5, k=4)
        id_path, ood_path = tmp_path / "id.jsonl", tmp_path / "ood.jsonl"
        write_logit_dump(id_path, id_recs)
        write_logit_dump(ood_path, ood_recs)
        assert main(["ood", "--id-dump", str(id_path), "--ood-dump", str(ood_path),
                     "--out", str(tmp_path)]) == 2


class TestExitCodes:
    def test_bad_config_is_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"trian": {}}')
        assert main(["synth", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_malformed_dump_is_2(self, tmp_path):
        dump = tmp_path / "d.jsonl"
        dump.write_text("{not json\n")
        assert main(["eval", "--dump", str(dump), "--out", str(tmp_path)]) == 2

    def test_missing_dump_is_3(self, tmp_path):
        assert main(["eval", "--dump", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path)]) == 3


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "cubcal.cli", "boundary", "--out", str(tmp_path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert (tmp_path / "boundary.csv").exists()
