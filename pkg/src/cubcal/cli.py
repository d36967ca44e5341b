"""Command-line interface: boundary-curve export, synthetic data generation,
training, post-hoc calibration of logit dumps, metric reports, and OOD
scoring.

Exit codes: 0 success, 2 config/schema error, 3 runtime or numeric failure.
``CUB_LOG`` (DEBUG/INFO/WARNING/ERROR) controls log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bnn import TrainingDivergence, save_checkpoint
from .boundary import BoundaryConfig, boundary_curve_csv_rows, entropy
from .config import ConfigError, RunConfig, load_config, parse_config
from .data import dataset_csv_rows, generate, split
from .dts import TemperaturePair, calibrate_dataset, fit_temperatures
from .experiments import run_training
from .metrics import aupr, auroc, calibration_report
from .records import DumpFormatError, read_logit_dump, write_logit_dump

log = logging.getLogger("cubcal")


def round_sig(value, digits: int = 6):
    """Recursively round floats to ``digits`` significant digits for reports."""
    if isinstance(value, float):
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {k: round_sig(v, digits) for k, v in value.items()}
    if isinstance(value, list):
        return [round_sig(v, digits) for v in value]
    return value


def write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(round_sig(obj), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def ordered_map(fn, items, workers: int = 1):
    """Map preserving input order; fans out over threads when workers > 1."""
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _load_run_config(args) -> RunConfig:
    seed = getattr(args, "seed", None)
    if args.config:
        return load_config(args.config, seed_override=seed)
    return parse_config({}, seed_override=seed)


def _split_records(records, val_fraction: float, seed: int):
    rng = np.random.default_rng([seed, 71])
    order = rng.permutation(len(records))
    n_val = max(1, int(round(val_fraction * len(records))))
    if n_val >= len(records):
        raise ConfigError(
            f"calibrate.val_fraction {val_fraction} leaves no test records"
        )
    val_idx, test_idx = sorted(order[:n_val]), sorted(order[n_val:])
    return [records[i] for i in val_idx], [records[i] for i in test_idx]


def cmd_boundary(args) -> int:
    cfg = BoundaryConfig(gamma=args.gamma, k=args.k)
    rows = boundary_curve_csv_rows(cfg, args.n_points)
    out = Path(args.out) / "boundary.csv" if Path(args.out).is_dir() else Path(args.out)
    out.write_text("\n".join(rows) + "\n", encoding="utf-8")
    log.info("wrote %s (%d rows)", out, len(rows) - 1)
    return 0


def cmd_synth(args) -> int:
    cfg = _load_run_config(args)
    x, y = generate(cfg.blob_spec, np.random.default_rng([cfg.seed, 1]))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "dataset.csv").write_text(
        "\n".join(dataset_csv_rows(x, y)) + "\n", encoding="utf-8"
    )
    splits = split(x, y, cfg.split_spec, np.random.default_rng([cfg.seed, 2]))
    for name in ("train", "val", "test"):
        rows = dataset_csv_rows(splits[f"X_{name}"], splits[f"y_{name}"])
        (out_dir / f"{name}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    log.info("wrote dataset and splits to %s", out_dir)
    return 0


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    x, y = generate(cfg.blob_spec, np.random.default_rng([cfg.seed, 1]))
    corpus = split(x, y, cfg.split_spec, np.random.default_rng([cfg.seed, 2]))
    result = run_training(
        seed=cfg.seed,
        beta=cfg.loss.beta,
        warmup_epochs=cfg.loss.warmup_epochs,
        boundary_cfg=cfg.boundary,
        train_cfg=cfg.train,
        corpus=corpus,
    )
    save_checkpoint(result["model"], out_dir / "checkpoint.json", cfg.train)
    write_json(out_dir / "trace.json", {"epochs": result["trace"]})
    write_logit_dump(out_dir / "val_dump.jsonl", result["val_records"])
    write_logit_dump(out_dir / "test_dump.jsonl", result["test_records"])
    report = calibration_report(result["test_records"], cfg.boundary,
                                cfg.metrics_m_bins, cfg.metrics_u_th)
    write_json(out_dir / "report.json", report.to_dict())
    log.info("training finished; artifacts in %s", out_dir)
    return 0


def cmd_calibrate(args) -> int:
    cfg = _load_run_config(args)
    records = read_logit_dump(args.dump)
    val_records, test_records = _split_records(records, cfg.calibrate_val_fraction,
                                               cfg.seed)
    th = cfg.dts_thresholds()
    temps = fit_temperatures(val_records, cfg.boundary, th, cfg.dts_m_bins)
    before = calibration_report(test_records, cfg.boundary,
                                cfg.metrics_m_bins, cfg.metrics_u_th)
    calibrated = calibrate_dataset(test_records, temps)
    after = calibration_report(calibrated, cfg.boundary,
                               cfg.metrics_m_bins, cfg.metrics_u_th)
    if before.accuracy != after.accuracy:
        raise RuntimeError("calibration changed test accuracy")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "temperature_pair.json", temps.to_dict())
    write_json(out_dir / "report_before.json", before.to_dict())
    write_json(out_dir / "report_after.json", after.to_dict())
    log.info("fitted t_high=%.4f t_low=%.4f", temps.t_high, temps.t_low)
    return 0


def cmd_eval(args) -> int:
    cfg = _load_run_config(args)
    records = read_logit_dump(args.dump)
    report = calibration_report(records, cfg.boundary,
                                cfg.metrics_m_bins, cfg.metrics_u_th)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "report.json", report.to_dict())
    if args.bins_csv:
        (out_dir / "bins.csv").write_text(
            "\n".join(report.bins.csv_rows()) + "\n", encoding="utf-8"
        )
    return 0


def cmd_ood(args) -> int:
    cfg = _load_run_config(args)
    id_records = read_logit_dump(args.id_dump)
    ood_records = read_logit_dump(args.ood_dump)
    if id_records[0].k != ood_records[0].k:
        raise DumpFormatError(
            f"class count mismatch: ID has K={id_records[0].k}, "
            f"OOD has K={ood_records[0].k}"
        )
    temps = None
    if args.temps:
        with open(args.temps, "r", encoding="utf-8") as fh:
            tp = json.load(fh)
        from .dts import DtsThresholds
        temps = TemperaturePair(
            t_high=tp["t_high"], t_low=tp["t_low"],
            thresholds=DtsThresholds(tp["gamma_low"], tp["gamma_high"], tp["eta"]),
        )

    def scores(records):
        ent = ordered_map(lambda r: r.uncertainty, records, args.workers)
        neg_conf = ordered_map(lambda r: -r.confidence, records, args.workers)
        return {"entropy": ent, "neg_confidence": neg_conf}

    def score_block(ids, oods):
        s_id, s_ood = scores(ids), scores(oods)
        return {
            name: {"auroc": auroc(s_id[name], s_ood[name]),
                   "aupr": aupr(s_id[name], s_ood[name])}
            for name in ("entropy", "neg_confidence")
        }

    out = {"before": score_block(id_records, ood_records)}
    if temps is not None:
        out["after"] = score_block(calibrate_dataset(id_records, temps),
                                   calibrate_dataset(ood_records, temps))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "ood_report.json", out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cubcal")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", default=None, help="JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("boundary", help="export the boundary curve as CSV")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--n-points", type=int, default=101)
    common(p, config=False)
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the variational classifier")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="fit dual temperatures on a logit dump")
    p.add_argument("--dump", required=True)
    common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("eval", help="metric report for a logit dump")
    p.add_argument("--dump", required=True)
    p.add_argument("--bins-csv", action="store_true", help="also write per-bin CSV")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ood", help="AUROC/AUPR for ID vs OOD logit dumps")
    p.add_argument("--id-dump", required=True)
    p.add_argument("--ood-dump", required=True)
    p.add_argument("--temps", default=None, help="fitted temperature-pair JSON")
    common(p)
    p.set_defaults(func=cmd_ood)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CUB_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DumpFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError, TrainingDivergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
