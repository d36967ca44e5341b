"""Synthetic Gaussian-blob corpora with controllable overlap, class
imbalance, train-fraction reduction, and a held-out near-OOD cluster.

All generation is keyed by explicit seeds; the test split is carved out
before any train/val reduction so it is identical across retain fractions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class BlobSpec:
    k: int = 3
    dim: int = 8
    n_per_class: int | list = 600
    spread: float | list = 1.0
    centers: np.ndarray | None = None
    center_scale: float = 2.2
    seed: int = 0

    def class_counts(self) -> list[int]:
        if isinstance(self.n_per_class, int):
            counts = [self.n_per_class] * self.k
        else:
            counts = [int(c) for c in self.n_per_class]
        if len(counts) != self.k or any(c < 1 for c in counts):
            raise ValueError(f"need {self.k} per-class counts, all >= 1")
        return counts

    def class_spreads(self) -> list[float]:
        if isinstance(self.spread, (int, float)):
            spreads = [float(self.spread)] * self.k
        else:
            spreads = [float(s) for s in self.spread]
        if len(spreads) != self.k or any(s <= 0 for s in spreads):
            raise ValueError(f"need {self.k} positive spreads")
        return spreads

    def resolved_centers(self) -> np.ndarray:
        if self.centers is not None:
            c = np.asarray(self.centers, dtype=float)
            if c.shape != (self.k, self.dim):
                raise ValueError(f"centers must be {self.k} x {self.dim}, got {c.shape}")
            return c
        if self.dim < self.k:
            raise ValueError("default axis-aligned centers need dim >= k")
        c = np.zeros((self.k, self.dim))
        for i in range(self.k):
            c[i, i] = self.center_scale
        return c


@dataclass
class SplitSpec:
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1
    retain_fraction: float = 1.0
    stratified: bool = True

    def __post_init__(self):
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        if not (0.0 < self.retain_fraction <= 1.0):
            raise ValueError("retain_fraction must lie in (0, 1]")


def generate(spec: BlobSpec, rng: np.random.Generator | None = None):
    """Gaussian clusters per class; returns (X, y) in class-block order."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    centers = spec.resolved_centers()
    counts = spec.class_counts()
    spreads = spec.class_spreads()
    xs, ys = [], []
    for c in range(spec.k):
        xs.append(centers[c] + spreads[c] * rng.standard_normal((counts[c], spec.dim)))
        ys.append(np.full(counts[c], c, dtype=int))
    return np.vstack(xs), np.concatenate(ys)


def _allocate(n: int, fractions: list[float]) -> list[int]:
    """Largest-remainder allocation of n items to fractions (each within one
    sample of the ideal share)."""
    ideal = [f * n for f in fractions]
    base = [int(np.floor(v)) for v in ideal]
    short = n - sum(base)
    order = np.argsort([b - v for b, v in zip(base, ideal)])
    for i in range(short):
        base[order[i]] += 1
    return base


def split(x: np.ndarray, y: np.ndarray, spec: SplitSpec,
          rng: np.random.Generator):
    """Stratified train/val/test split; the retain fraction subsamples only
    train and val, leaving the test partition byte-identical."""
    parts = {"train": ([], []), "val": ([], []), "test": ([], [])}
    classes = np.unique(y)
    for c in classes:
        idx = np.flatnonzero(y == c)
        if spec.stratified and len(idx) < 3:
            raise ValueError(f"class {c} has fewer than 3 samples; cannot stratify")
        idx = idx[rng.permutation(len(idx))]
        n_tr, n_va, n_te = _allocate(len(idx), [spec.train, spec.val, spec.test])
        blocks = {
            "train": idx[:n_tr],
            "val": idx[n_tr:n_tr + n_va],
            "test": idx[n_tr + n_va:],
        }
        for name in ("train", "val"):
            keep = max(1, int(round(spec.retain_fraction * len(blocks[name]))))
            blocks[name] = blocks[name][:keep]
        for name, block in blocks.items():
            parts[name][0].append(x[block])
            parts[name][1].append(y[block])
    out = {}
    for name, (xs, ys) in parts.items():
        out[f"X_{name}"] = np.vstack(xs)
        out[f"y_{name}"] = np.concatenate(ys)
    return out


def make_ood(n: int, dim: int, center, spread: float,
             rng: np.random.Generator) -> np.ndarray:
    """Unlabeled cluster from a class absent from training."""
    if n < 1:
        raise ValueError("need n >= 1 OOD samples")
    center = np.asarray(center, dtype=float)
    if center.shape != (dim,):
        raise ValueError(f"center must have shape ({dim},), got {center.shape}")
    return center + spread * rng.standard_normal((n, dim))


def imbalanced_preset(total: int = 2000, seed: int = 0) -> BlobSpec:
    """Seven-class corpus with geometric-decay class skew."""
    ratios = np.array([72.0, 10.0, 8.0, 4.0, 3.0, 1.5, 1.5])
    counts = np.maximum((ratios / ratios.sum() * total).astype(int), 3)
    return BlobSpec(k=7, dim=8, n_per_class=list(counts), spread=1.0, seed=seed)


def dataset_csv_rows(x: np.ndarray, y: np.ndarray) -> list[str]:
    dim = x.shape[1]
    rows = ["id,label," + ",".join(f"f{i}" for i in range(dim))]
    for i in range(len(y)):
        feats = ",".join(f"{v:.6f}" for v in x[i])
        rows.append(f"{i},{int(y[i])},{feats}")
    return rows
