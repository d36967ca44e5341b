"""Dual temperature scaling: region assignment from pre-calibration
confidence/uncertainty, bidirectional logit scaling, and two-temperature
fitting that minimizes the boundary-curve calibration error on a validation
set. Scaling divides logits by a positive scalar, so the predicted class of
every sample is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import minimize

from .boundary import BoundaryConfig, entropy, invert_u_max, softmax
from .metrics import bcce_from_arrays
from .records import PredictionRecord

SHARPEN = "sharpen"
SOFTEN = "soften"


@dataclass(frozen=True)
class DtsThresholds:
    """Confidence band (gamma_low, gamma_high] plus the entropy threshold eta
    that splits the band into sharpen/soften halves."""

    gamma_low: float
    gamma_high: float
    eta: float

    def validate(self, k: int) -> None:
        if not (1.0 / k < self.gamma_low < self.gamma_high < 1.0):
            raise ValueError(
                f"need 1/k < gamma_low < gamma_high < 1, got "
                f"({self.gamma_low}, {self.gamma_high}) for k={k}"
            )
        if not (0.0 < self.eta < np.log(k)):
            raise ValueError(f"eta must lie in (0, ln k), got {self.eta}")

    @classmethod
    def from_eta(cls, eta: float, k: int, gamma_low: float = 0.9) -> "DtsThresholds":
        """Derive gamma_high as the confidence where the upper entropy bound
        equals eta."""
        th = cls(gamma_low=gamma_low, gamma_high=invert_u_max(eta, k), eta=eta)
        th.validate(k)
        return th


@dataclass(frozen=True)
class TemperaturePair:
    t_high: float
    t_low: float
    thresholds: DtsThresholds
    bcce_before: float | None = None
    bcce_after: float | None = None
    converged: bool = True

    def __post_init__(self):
        if self.t_high <= 0 or self.t_low <= 0:
            raise ValueError("temperatures must be strictly positive")

    def to_dict(self) -> dict:
        return {
            "t_high": self.t_high,
            "t_low": self.t_low,
            "gamma_low": self.thresholds.gamma_low,
            "gamma_high": self.thresholds.gamma_high,
            "eta": self.thresholds.eta,
            "bcce_before": self.bcce_before,
            "bcce_after": self.bcce_after,
        }


def assign_region(p_hat: float, u: float, th: DtsThresholds) -> str:
    """Sharpen or soften; every (confidence, entropy) pair maps to exactly one."""
    if p_hat > th.gamma_high:
        return SHARPEN
    if p_hat > th.gamma_low and u < th.eta:
        return SHARPEN
    return SOFTEN


def apply_dts(mean_logits: np.ndarray, region: str, temps: TemperaturePair) -> np.ndarray:
    """Divide logits by the region's temperature."""
    if region == SHARPEN:
        return np.asarray(mean_logits, dtype=float) / temps.t_high
    if region == SOFTEN:
        return np.asarray(mean_logits, dtype=float) / temps.t_low
    raise ValueError(f"unknown region {region!r}")


def _sharpen_mask(records, th: DtsThresholds) -> np.ndarray:
    return np.array(
        [assign_region(r.confidence, r.uncertainty, th) == SHARPEN for r in records]
    )


def _recalibrated_bcce(z: np.ndarray, sharpen: np.ndarray, t_high: float,
                       t_low: float, cfg: BoundaryConfig, m_bins: int) -> float:
    temps = np.where(sharpen, t_high, t_low)
    probs = softmax(z / temps[:, None], axis=-1)
    conf = probs.max(axis=1)
    u = entropy(probs, axis=-1)
    return bcce_from_arrays(conf, u, cfg, m_bins)[0]


def fit_temperatures(val_records, cfg: BoundaryConfig, th: DtsThresholds,
                     m_bins: int = 15, max_iter: int = 50) -> TemperaturePair:
    """Fit (t_high, t_low) by minimizing the recalibrated validation BCCE.

    Region membership is computed once from the uncalibrated records and held
    fixed. Optimization runs in log-temperature space (L-BFGS-B with numeric
    gradients) from a 4x4 multi-start plus the best point of a coarse
    log-grid seed; the grid seed guards against the small discontinuities the
    objective has where samples cross confidence-bin edges.

    Temperatures are constrained to [0.25, 8]. The objective alone is
    degenerate: dividing logits by a temperature near zero saturates every
    prediction (entropy and its boundary target both collapse to zero), and a
    huge temperature flattens every prediction onto the uniform point of the
    curve, so the unconstrained minimum erases the uncertainty signal the
    calibrator exists to preserve. The bounds keep the fit on the same domain
    the grid oracle searches.
    """
    th.validate(cfg.k)
    if len(val_records) == 0:
        raise ValueError("fit_temperatures requires a nonempty validation set")
    z = np.stack([r.mean_logits for r in val_records])
    sharpen = _sharpen_mask(val_records, th)
    preds_before = np.argmax(z, axis=1)

    def objective(log_t):
        return _recalibrated_bcce(z, sharpen, np.exp(log_t[0]), np.exp(log_t[1]),
                                  cfg, m_bins)

    starts = [np.log([a, b]) for a, b in product([0.5, 1.0, 2.0, 4.0], repeat=2)]
    grid = np.linspace(np.log(0.25), np.log(8.0), 21)
    grid_vals = [(objective(np.array([a, b])), np.array([a, b]))
                 for a in grid for b in grid]
    starts.append(min(grid_vals, key=lambda t: t[0])[1])
    log_bounds = [(np.log(0.25), np.log(8.0))] * 2

    candidates, any_success = [], False
    for x0 in starts:
        res = minimize(objective, x0, method="L-BFGS-B", bounds=log_bounds,
                       options={"maxiter": max_iter})
        any_success = any_success or bool(res.success)
        candidates.append((float(res.fun), res.x))
        candidates.append((float(objective(x0)), x0))

    # An exactly boundary-calibrated set is flat in temperature (records on
    # the lower bound have binary support, records on the upper bound have a
    # symmetric residual; both stay on their branch when scaled), so the
    # minimum can be a plateau. Break numerical ties toward the identity pair.
    best_val = min(val for val, _ in candidates)
    eligible = [x for val, x in candidates if val <= best_val + 1e-9]
    best_x = min(eligible, key=lambda x: float(np.sum(x * x)))
    best_val = float(objective(best_x))

    t_high, t_low = float(np.exp(best_x[0])), float(np.exp(best_x[1]))
    # Positive scaling keeps the argmax; assert rather than assume.
    preds_after = np.argmax(z / np.where(sharpen, t_high, t_low)[:, None], axis=1)
    if not np.array_equal(preds_before, preds_after):
        raise AssertionError("temperature scaling changed a predicted label")

    before = _recalibrated_bcce(z, sharpen, 1.0, 1.0, cfg, m_bins)
    return TemperaturePair(
        t_high=t_high,
        t_low=t_low,
        thresholds=th,
        bcce_before=float(before),
        bcce_after=float(best_val),
        converged=any_success,
    )


def calibrate_dataset(records, temps: TemperaturePair) -> list[PredictionRecord]:
    """Scale each record's mean logits by its pre-calibration region's
    temperature and rebuild the distribution from the scaled logits."""
    out = []
    for rec in records:
        region = assign_region(rec.confidence, rec.uncertainty, temps.thresholds)
        scaled = apply_dts(rec.mean_logits, region, temps)
        out.append(PredictionRecord.from_mean_logits(rec.label, scaled, rec.record_id))
    return out
