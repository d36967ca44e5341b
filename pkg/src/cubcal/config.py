"""Run configuration: a single JSON document with nested sections mirroring
the module configs. Unknown sections or keys are hard errors so typos in
threshold names cannot silently fall back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bnn import TrainConfig
from .boundary import BoundaryConfig
from .data import BlobSpec, SplitSpec
from .dts import DtsThresholds
from .loss import LossWeights


class ConfigError(ValueError):
    """Raised for malformed run configuration documents."""


_NUM = (int, float)

# section -> key -> (allowed types, default)
_SCHEMA = {
    "boundary": {
        "k": (int, 3),
        "gamma": (_NUM, 0.9),
    },
    "train": {
        "epochs": (int, 60),
        "batch_size": (int, 64),
        "learning_rate": (_NUM, 0.05),
        "momentum": (_NUM, 0.9),
        "weight_decay": (_NUM, 5e-4),
        "mc_train": (int, 3),
        "mc_infer": (int, 20),
        "kl_scale_mode": (str, "n_train"),
        "hidden": (int, 32),
        "init_mode": (str, "random"),
        "init_sigma": (_NUM, 0.05),
        "moped_alpha": (_NUM, 0.01),
        "prior_std": (_NUM, 1.0),
        "class_weighted": (bool, False),
        "lr_schedule": (str, "constant"),
        "lr_step_size": (int, 30),
        "lr_step_gamma": (_NUM, 0.1),
        "pretrain_epochs": (int, 40),
        "grad_clip": ((int, float, type(None)), None),
    },
    "loss": {
        "beta": (_NUM, 0.1),
        "warmup_epochs": (int, 5),
    },
    "dts": {
        "eta": (_NUM, 0.325),
        "gamma_low": (_NUM, 0.9),
        "gamma_high": ((int, float, type(None)), None),  # derived from eta when null
        "m_bins": (int, 15),
    },
    "metrics": {
        "m_bins": (int, 15),
        "u_th": (_NUM, 0.325),
    },
    "data": {
        "k": (int, 3),
        "dim": (int, 8),
        "n_per_class": ((int, list), 600),
        "spread": ((int, float, list), 1.0),
        "center_scale": (_NUM, 2.2),
        "train_fraction": (_NUM, 0.8),
        "val_fraction": (_NUM, 0.1),
        "test_fraction": (_NUM, 0.1),
        "retain_fraction": (_NUM, 1.0),
        "stratified": (bool, True),
    },
    "calibrate": {
        "val_fraction": (_NUM, 0.5),
    },
    "seed": (int, 42),
}


@dataclass
class RunConfig:
    raw: dict
    seed: int
    boundary: BoundaryConfig
    train: TrainConfig
    loss: LossWeights
    metrics_m_bins: int
    metrics_u_th: float
    dts_m_bins: int
    calibrate_val_fraction: float
    blob_spec: BlobSpec
    split_spec: SplitSpec

    def dts_thresholds(self) -> DtsThresholds:
        d = self.raw["dts"]
        if d["gamma_high"] is None:
            th = DtsThresholds.from_eta(d["eta"], self.boundary.k, d["gamma_low"])
        else:
            th = DtsThresholds(d["gamma_low"], d["gamma_high"], d["eta"])
        th.validate(self.boundary.k)
        return th


def _validate_section(name: str, given: dict, schema: dict) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{name}: expected an object")
    for key in given:
        if key not in schema:
            raise ConfigError(f"{name}.{key}: unknown key")
    out = {}
    for key, (types, default) in schema.items():
        value = given.get(key, default)
        allowed = types if isinstance(types, tuple) else (types,)
        ok = isinstance(value, allowed)
        # bools are ints in Python; reject them unless bool is explicitly allowed
        if ok and isinstance(value, bool) and bool not in allowed:
            ok = False
        if not ok:
            raise ConfigError(f"{name}.{key}: invalid value {value!r}")
        out[key] = value
    return out


def parse_config(doc: dict, seed_override: int | None = None) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a JSON object")
    for key in doc:
        if key not in _SCHEMA:
            raise ConfigError(f"top level: unknown key {key!r}")
    raw: dict = {}
    for name, schema in _SCHEMA.items():
        if name == "seed":
            continue
        raw[name] = _validate_section(name, doc.get(name, {}), schema)
    seed = doc.get("seed", _SCHEMA["seed"][1])
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed: invalid value {seed!r}")
    if seed_override is not None:
        seed = seed_override

    try:
        boundary = BoundaryConfig(gamma=raw["boundary"]["gamma"], k=raw["boundary"]["k"])
        train_cfg = TrainConfig(seed=seed, **raw["train"])
        loss_weights = LossWeights(**raw["loss"])
        d = raw["data"]
        blob = BlobSpec(k=d["k"], dim=d["dim"], n_per_class=d["n_per_class"],
                        spread=d["spread"], center_scale=d["center_scale"], seed=seed)
        splits = SplitSpec(train=d["train_fraction"], val=d["val_fraction"],
                           test=d["test_fraction"],
                           retain_fraction=d["retain_fraction"],
                           stratified=d["stratified"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    cal = raw["calibrate"]["val_fraction"]
    if not (0.0 < cal < 1.0):
        raise ConfigError(f"calibrate.val_fraction: must lie in (0, 1), got {cal}")

    return RunConfig(
        raw=raw,
        seed=seed,
        boundary=boundary,
        train=train_cfg,
        loss=loss_weights,
        metrics_m_bins=raw["metrics"]["m_bins"],
        metrics_u_th=raw["metrics"]["u_th"],
        dts_m_bins=raw["dts"]["m_bins"],
        calibrate_val_fraction=cal,
        blob_spec=blob,
        split_spec=splits,
    )


def load_config(path, seed_override: int | None = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: invalid JSON ({exc.msg})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_config(doc, seed_override)
