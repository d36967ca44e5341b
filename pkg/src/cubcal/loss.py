"""Boundary-deviation loss: four-quadrant deviations, normalization, the
log-barrier objective, its analytic gradient, the joint training objective,
and the soft accuracy-versus-uncertainty surrogate used as a baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import LOG_FLOOR, BoundaryConfig, feasible_span, softmax, u_max, u_min
from .records import PredictionRecord

# Normalized deviations are clamped to [0, 1 - BARRIER_EPS] so the barrier
# -log(1 - d) stays finite.
BARRIER_EPS = 1e-6


@dataclass(frozen=True)
class QuadrantLabel:
    """Accuracy x confidence-regime cell a sample falls into."""

    accurate: bool
    high_confidence: bool

    @property
    def region(self) -> str:
        if self.accurate:
            return "AC" if self.high_confidence else "AU"
        return "IC" if self.high_confidence else "IU"


@dataclass(frozen=True)
class DeviationRecord:
    quadrant: QuadrantLabel
    delta: float
    delta_norm: float


@dataclass(frozen=True)
class LossWeights:
    """Barrier-loss weight and the number of epochs it is held at zero."""

    beta: float = 0.1
    warmup_epochs: int = 5

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.warmup_epochs < 0:
            raise ValueError(f"warmup_epochs must be >= 0, got {self.warmup_epochs}")

    def effective_beta(self, epoch: int) -> float:
        return 0.0 if epoch < self.warmup_epochs else self.beta


def classify_quadrant(true_label: int, pred_label: int, p_hat: float,
                      cfg: BoundaryConfig) -> QuadrantLabel:
    """Accuracy and confidence-regime flags; p_hat == gamma counts as low."""
    return QuadrantLabel(accurate=(pred_label == true_label),
                         high_confidence=(p_hat > cfg.gamma))


def boundary_deviation(rec: PredictionRecord, cfg: BoundaryConfig) -> DeviationRecord:
    """Raw and normalized distance of a record from the ideal boundary.

    Entropy distance to the boundary target in the AC and IU cells,
    confidence distance to gamma in the AU and IC cells.
    """
    quad = classify_quadrant(rec.label, rec.pred, rec.confidence, cfg)
    if quad.region == "AC":
        delta = abs(u_min(rec.confidence, cfg.k) - rec.uncertainty)
    elif quad.region == "IU":
        delta = abs(u_max(rec.confidence, cfg.k) - rec.uncertainty)
    else:  # AU and IC measure distance to the confidence threshold
        delta = abs(rec.confidence - cfg.gamma)
    dnorm = normalize_deviation(delta, quad, rec.confidence, cfg)
    return DeviationRecord(quadrant=quad, delta=float(delta), delta_norm=dnorm)


def normalize_deviation(delta: float, quad: QuadrantLabel, p_hat: float,
                        cfg: BoundaryConfig) -> float:
    """Scale a raw deviation by its per-quadrant feasible maximum, clamped
    to [0, 1 - BARRIER_EPS].

    AC/IU use the entropy span (1 - p_hat) * ln(k - 1) (zero span maps to 0),
    AU uses gamma - 1/k, IC uses 1 - gamma.
    """
    if delta < 0:
        raise ValueError(f"deviation must be >= 0, got {delta}")
    region = quad.region
    if region in ("AC", "IU"):
        span = feasible_span(p_hat, cfg.k)
        if span <= 0.0:
            return 0.0
        scaled = delta / span
    elif region == "AU":
        scaled = delta / (cfg.gamma - 1.0 / cfg.k)
    else:  # IC
        scaled = delta / (1.0 - cfg.gamma)
    return float(np.clip(scaled, 0.0, 1.0 - BARRIER_EPS))


def cub_loss(records, cfg: BoundaryConfig) -> float:
    """Sum over samples of -log(1 - normalized deviation)."""
    if len(records) == 0:
        raise ValueError("cub_loss requires a nonempty batch")
    total = 0.0
    for rec in records:
        dnorm = boundary_deviation(rec, cfg).delta_norm
        total += -np.log(1.0 - dnorm)
    return float(total)


def _sign(x: float) -> float:
    # |.|' at 0 is taken as 0 (subgradient convention).
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def _barrier_grad_probs(probs: np.ndarray, label: int, cfg: BoundaryConfig) -> np.ndarray:
    """Gradient of -log(1 - delta_norm) w.r.t. the mean predictive distribution.

    The predicted-class index and quadrant membership are held fixed
    (piecewise-region convention); the clamp, when active, contributes a zero
    derivative.
    """
    k = cfg.k
    j = int(np.argmax(probs))
    p_hat = float(probs[j])
    logp = np.log(np.clip(probs, LOG_FLOOR, None))
    u = float(-np.sum(probs * logp))
    du_dp = -(logp + 1.0)

    quad = classify_quadrant(label, j, p_hat, cfg)
    region = quad.region
    grad = np.zeros_like(probs)

    if region in ("AC", "IU"):
        span = feasible_span(p_hat, k)
        if span <= 0.0:
            return grad
        if region == "AC":
            target = u_min(p_hat, k)
            dtarget = np.log((1.0 - p_hat) / p_hat) if p_hat < 1.0 else 0.0
        else:
            target = u_max(p_hat, k)
            dtarget = (
                np.log((1.0 - p_hat) / ((k - 1) * p_hat)) if p_hat < 1.0 else 0.0
            )
        delta = abs(target - u)
        dnorm = delta / span
        if dnorm >= 1.0 - BARRIER_EPS:
            return grad
        s = _sign(target - u)
        # delta_norm = |target(p_hat) - U| / ((1 - p_hat) ln(k-1))
        ddnorm_du = -s / span
        ddnorm_dphat = s * dtarget / span + delta * np.log(k - 1) / span**2
        scale = 1.0 / (1.0 - dnorm)
        grad = scale * ddnorm_du * du_dp
        grad[j] += scale * ddnorm_dphat
        return grad

    denom = (cfg.gamma - 1.0 / k) if region == "AU" else (1.0 - cfg.gamma)
    delta = abs(p_hat - cfg.gamma)
    dnorm = delta / denom
    if dnorm >= 1.0 - BARRIER_EPS:
        return grad
    grad[j] = (1.0 / (1.0 - dnorm)) * _sign(p_hat - cfg.gamma) / denom
    return grad


def cub_loss_gradient(records, cfg: BoundaryConfig) -> list[np.ndarray]:
    """Per-record gradients of the barrier loss w.r.t. logits.

    Returns an S x K array per record when MC sample logits are present
    (gradient split equally across the S softmax paths), else a K-vector
    w.r.t. the mean logits.
    """
    grads: list[np.ndarray] = []
    for rec in records:
        gp = _barrier_grad_probs(rec.mean_probs, rec.label, cfg)
        if rec.sample_logits is not None:
            z = rec.sample_logits
            s = z.shape[0]
            q = softmax(z, axis=-1)
            inner = q @ gp  # per-draw <q_s, g>
            gz = (q * (gp[None, :] - inner[:, None])) / s
            grads.append(gz)
        else:
            q = rec.mean_probs
            grads.append(q * (gp - float(q @ gp)))
    return grads


def total_loss(elbo_value: float, cub_value: float, weights: LossWeights,
               epoch: int) -> float:
    """Joint objective: ELBO loss plus the (possibly warm-up-zeroed) barrier."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return float(elbo_value + weights.effective_beta(epoch) * cub_value)


def avuc_loss(records, u_th: float = 0.325) -> float:
    """Soft accuracy-versus-uncertainty surrogate (tanh-relaxed counts).

    Accurate samples contribute confidence-weighted mass, inaccurate samples
    (1 - confidence)-weighted mass; the certain/uncertain split gates on the
    sample's entropy against ``u_th``, with 1 - tanh(U) / tanh(U) as the soft
    certainty indicators.
    """
    if u_th <= 0:
        raise ValueError(f"u_th must be > 0, got {u_th}")
    n_ac = n_au = n_ic = n_iu = 0.0
    for rec in records:
        t = np.tanh(rec.uncertainty)
        if rec.accurate:
            if rec.uncertainty < u_th:
                n_ac += rec.confidence * (1.0 - t)
            else:
                n_au += rec.confidence * t
        else:
            if rec.uncertainty < u_th:
                n_ic += (1.0 - rec.confidence) * (1.0 - t)
            else:
                n_iu += (1.0 - rec.confidence) * t
    total = n_ac + n_au + n_ic + n_iu
    if total == 0.0:
        return 0.0
    ratio = (n_ac + n_iu) / total
    return float(-np.log(max(ratio, LOG_FLOOR)))
