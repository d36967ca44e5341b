"""Classification and calibration metrics.

Covers accuracy, balanced accuracy, the accuracy-versus-uncertainty rate,
the uncertainty separation between wrong and right predictions, confidence-
binned calibration error, the boundary-curve calibration error (weighted and
per-sample-sum variants), and rank-based OOD scores (AUROC / AUPR).

Metrics that are undefined for a given batch (no incorrect samples, a class
absent from the labels) are reported as ``None`` rather than zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .boundary import BoundaryConfig, u_ideal


@dataclass(frozen=True)
class AvUCounts:
    n_ac: int
    n_au: int
    n_ic: int
    n_iu: int

    @property
    def total(self) -> int:
        return self.n_ac + self.n_au + self.n_ic + self.n_iu


@dataclass(frozen=True)
class BinnedDiagnostics:
    """Per-bin boundary diagnostics over equally spaced confidence bins."""

    edges: np.ndarray          # m + 1 bin edges spanning [1/k, 1]
    counts: np.ndarray         # samples per bin; sums to N
    mean_u: np.ndarray         # mean actual entropy per bin (nan when empty)
    mean_u_ideal: np.ndarray   # mean boundary-target entropy per bin

    @property
    def m(self) -> int:
        return len(self.counts)

    def csv_rows(self) -> list[str]:
        rows = ["bin_lo,bin_hi,count,mean_u,mean_u_ideal"]
        for i in range(self.m):
            mu = "" if np.isnan(self.mean_u[i]) else f"{self.mean_u[i]:.6f}"
            mi = "" if np.isnan(self.mean_u_ideal[i]) else f"{self.mean_u_ideal[i]:.6f}"
            rows.append(
                f"{self.edges[i]:.6f},{self.edges[i + 1]:.6f},{int(self.counts[i])},{mu},{mi}"
            )
        return rows


@dataclass(frozen=True)
class CalibrationReport:
    accuracy: float
    balanced_accuracy: float | None
    avu: float
    delta_u: float | None
    ece: float
    bcce: float
    bcce_sum_variant: float
    u_th: float
    m_bins: int
    bins: BinnedDiagnostics

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "avu": self.avu,
            "delta_u": self.delta_u,
            "ece": self.ece,
            "bcce": self.bcce,
            "bcce_sum_variant": self.bcce_sum_variant,
            "u_th": self.u_th,
            "m_bins": self.m_bins,
            "bins": {
                "edges": [float(e) for e in self.edges_list()],
                "counts": [int(c) for c in self.bins.counts],
                "mean_u": [None if np.isnan(v) else float(v) for v in self.bins.mean_u],
                "mean_u_ideal": [
                    None if np.isnan(v) else float(v) for v in self.bins.mean_u_ideal
                ],
            },
        }

    def edges_list(self):
        return list(self.bins.edges)


def _bin_index(conf: np.ndarray, lo: float, m: int) -> np.ndarray:
    """Index of each confidence into m equal bins over [lo, 1]; last bin is
    closed on the right."""
    width = (1.0 - lo) / m
    idx = np.floor((conf - lo) / width).astype(int)
    return np.clip(idx, 0, m - 1)


def accuracy(records) -> float:
    if len(records) == 0:
        raise ValueError("accuracy requires a nonempty batch")
    return float(np.mean([r.accurate for r in records]))


def balanced_accuracy(records) -> float | None:
    """Mean of per-class recalls; None when some class never appears as a label."""
    if len(records) == 0:
        raise ValueError("balanced_accuracy requires a nonempty batch")
    k = records[0].k
    labels = np.array([r.label for r in records])
    preds = np.array([r.pred for r in records])
    recalls = []
    for c in range(k):
        mask = labels == c
        if not np.any(mask):
            return None
        recalls.append(float(np.mean(preds[mask] == c)))
    return float(np.mean(recalls))


def avu_counts(records, u_th: float) -> AvUCounts:
    """2x2 counts with certain := entropy < u_th."""
    if u_th <= 0:
        raise ValueError(f"u_th must be > 0, got {u_th}")
    n_ac = n_au = n_ic = n_iu = 0
    for r in records:
        certain = r.uncertainty < u_th
        if r.accurate:
            if certain:
                n_ac += 1
            else:
                n_au += 1
        else:
            if certain:
                n_ic += 1
            else:
                n_iu += 1
    return AvUCounts(n_ac, n_au, n_ic, n_iu)


def avu(counts: AvUCounts) -> float:
    """Dependable-behavior rate: (accurate-certain + inaccurate-uncertain) / N."""
    if counts.total == 0:
        raise ValueError("avu requires at least one sample")
    return (counts.n_ac + counts.n_iu) / counts.total


def delta_u(records) -> float | None:
    """Mean entropy of wrong predictions minus mean entropy of right ones;
    None if either group is empty."""
    right = [r.uncertainty for r in records if r.accurate]
    wrong = [r.uncertainty for r in records if not r.accurate]
    if not right or not wrong:
        return None
    return float(np.mean(wrong) - np.mean(right))


def ece(records, m: int = 15) -> float:
    """Confidence-binned calibration error over equal bins spanning [1/k, 1]."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if len(records) == 0:
        raise ValueError("ece requires a nonempty batch")
    k = records[0].k
    conf = np.array([r.confidence for r in records])
    acc = np.array([r.accurate for r in records], dtype=float)
    idx = _bin_index(conf, 1.0 / k, m)
    n = len(records)
    out = 0.0
    for b in range(m):
        mask = idx == b
        cnt = int(mask.sum())
        if cnt == 0:
            continue
        out += (cnt / n) * abs(float(acc[mask].mean()) - float(conf[mask].mean()))
    return float(out)


def bcce_from_arrays(conf: np.ndarray, u: np.ndarray, cfg: BoundaryConfig,
                     m: int = 15) -> tuple[float, float, BinnedDiagnostics]:
    """Boundary-curve calibration error from confidence/entropy arrays.

    Returns the bin-weighted average |mean U - mean U_ideal|, the
    unnormalized per-sample sum of |U - U_ideal|, and per-bin diagnostics.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    n = len(conf)
    if n == 0:
        raise ValueError("bcce requires a nonempty batch")
    ideal = u_ideal(conf, cfg)
    lo = 1.0 / cfg.k
    edges = np.linspace(lo, 1.0, m + 1)
    idx = _bin_index(conf, lo, m)
    counts = np.zeros(m, dtype=int)
    mean_u = np.full(m, np.nan)
    mean_ideal = np.full(m, np.nan)
    weighted = 0.0
    for b in range(m):
        mask = idx == b
        cnt = int(mask.sum())
        counts[b] = cnt
        if cnt == 0:
            continue
        mu = float(u[mask].mean())
        mi = float(ideal[mask].mean())
        mean_u[b] = mu
        mean_ideal[b] = mi
        weighted += (cnt / n) * abs(mu - mi)
    sum_variant = float(np.sum(np.abs(u - ideal)))
    return float(weighted), sum_variant, BinnedDiagnostics(edges, counts, mean_u, mean_ideal)


def bcce(records, cfg: BoundaryConfig, m: int = 15) -> tuple[float, float, BinnedDiagnostics]:
    conf = np.array([r.confidence for r in records])
    u = np.array([r.uncertainty for r in records])
    return bcce_from_arrays(conf, u, cfg, m)


def auroc(id_scores, ood_scores) -> float:
    """Probability a random OOD score exceeds a random ID score, ties at 1/2."""
    id_scores = np.asarray(id_scores, dtype=float)
    ood_scores = np.asarray(ood_scores, dtype=float)
    if id_scores.size == 0 or ood_scores.size == 0:
        raise ValueError("auroc requires nonempty score lists")
    ranks = rankdata(np.concatenate([id_scores, ood_scores]))
    r_ood = ranks[id_scores.size:].sum()
    n_o = ood_scores.size
    u_stat = r_ood - n_o * (n_o + 1) / 2.0
    return float(u_stat / (id_scores.size * n_o))


def aupr(id_scores, ood_scores) -> float:
    """Area under precision-recall with OOD as the positive class; step-wise
    integration over all distinct score thresholds (no interpolation)."""
    id_scores = np.asarray(id_scores, dtype=float)
    ood_scores = np.asarray(ood_scores, dtype=float)
    if id_scores.size == 0 or ood_scores.size == 0:
        raise ValueError("aupr requires nonempty score lists")
    n_ood = ood_scores.size
    thresholds = np.unique(np.concatenate([id_scores, ood_scores]))[::-1]
    area = 0.0
    prev_recall = 0.0
    for t in thresholds:
        tp = int(np.sum(ood_scores >= t))
        fp = int(np.sum(id_scores >= t))
        if tp + fp == 0:
            continue
        precision = tp / (tp + fp)
        recall = tp / n_ood
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return float(area)


def calibration_report(records, cfg: BoundaryConfig, m: int = 15,
                       u_th: float = 0.325) -> CalibrationReport:
    """Full metric bundle for a record batch."""
    weighted, sum_variant, bins = bcce(records, cfg, m)
    return CalibrationReport(
        accuracy=accuracy(records),
        balanced_accuracy=balanced_accuracy(records),
        avu=avu(avu_counts(records, u_th)),
        delta_u=delta_u(records),
        ece=ece(records, m),
        bcce=weighted,
        bcce_sum_variant=sum_variant,
        u_th=u_th,
        m_bins=m,
        bins=bins,
    )
