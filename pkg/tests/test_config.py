import json

import pytest

from cubcal.config import ConfigError, load_config, parse_config


class TestDefaults:
    def test_empty_document_gives_defaults(self):
        cfg = parse_config({})
        assert cfg.seed == 42
        assert cfg.boundary.gamma == 0.9 and cfg.boundary.k == 3
        assert cfg.train.epochs == 60
        assert cfg.loss.beta == 0.1 and cfg.loss.warmup_epochs == 5
        assert cfg.metrics_m_bins == 15 and cfg.metrics_u_th == 0.325
        assert cfg.calibrate_val_fraction == 0.5
        assert cfg.blob_spec.k == 3 and cfg.blob_spec.dim == 8
        assert cfg.split_spec.retain_fraction == 1.0

    def test_dts_thresholds_derived_from_eta(self):
        th = parse_config({}).dts_thresholds()
        assert th.eta == 0.325
        assert th.gamma_high == pytest.approx(0.923, abs=0.002)

    def test_explicit_gamma_high(self):
        th = parse_config({"dts": {"gamma_high": 0.95}}).dts_thresholds()
        assert th.gamma_high == 0.95


class TestOverrides:
    def test_nested_values_applied(self):
        cfg = parse_config({
            "train": {"epochs": 5, "prior_std": 0.5, "grad_clip": 10},
            "loss": {"beta": 0.0},
            "data": {"n_per_class": [10, 20, 30]},
            "seed": 7,
        })
        assert cfg.train.epochs == 5 and cfg.train.prior_std == 0.5
        assert cfg.train.grad_clip == 10
        assert cfg.loss.beta == 0.0
        assert cfg.blob_spec.class_counts() == [10, 20, 30]
        assert cfg.seed == 7 and cfg.train.seed == 7

    def test_seed_override_wins(self):
        cfg = parse_config({"seed": 7}, seed_override=99)
        assert cfg.seed == 99 and cfg.train.seed == 99 and cfg.blob_spec.seed == 99


class TestRejections:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config({"trian": {}})

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError, match="train.epoch"):
            parse_config({"train": {"epoch": 5}})

    def test_wrong_type(self):
        with pytest.raises(ConfigError, match="invalid value"):
            parse_config({"train": {"epochs": "sixty"}})

    def test_bool_rejected_for_numeric(self):
        with pytest.raises(ConfigError, match="invalid value"):
            parse_config({"train": {"epochs": True}})
        with pytest.raises(ConfigError):
            parse_config({"seed": True})

    def test_non_object_section(self):
        with pytest.raises(ConfigError, match="expected an object"):
            parse_config({"train": [1, 2]})

    def test_domain_errors_become_config_errors(self):
        with pytest.raises(ConfigError):
            parse_config({"boundary": {"gamma": 1.5}})
        with pytest.raises(ConfigError):
            parse_config({"calibrate": {"val_fraction": 1.0}})
        with pytest.raises(ConfigError):
            parse_config({"train": {"grad_clip": -1}})


class TestLoad:
    def test_load_valid_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train": {"epochs": 2}}))
        assert load_config(path).train.epochs == 2

    def test_invalid_json_cites_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n"train": oops\n}')
        with pytest.raises(ConfigError, match="line 2"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")
