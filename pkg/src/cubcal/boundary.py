"""Probability-vector primitives and the confidence-uncertainty boundary curve.

All entropies are in nats. For a predictive distribution with confidence
``p_hat`` (the largest probability) over ``k`` classes, the achievable
predictive entropy lies in a closed interval: the lower end is reached when
the residual mass sits on a single runner-up class, the upper end when it is
spread uniformly over the other ``k - 1`` classes. The ideal boundary curve
picks one of the two ends depending on which side of a confidence threshold
``gamma`` the sample falls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

# Probabilities below this are clamped before taking logs; 0 * log 0 := 0.
LOG_FLOOR = 1e-12
# Tolerance on the sum-to-one invariant of probability vectors.
SUM_TOL = 1e-9
# Slack allowed on the [1/k, 1] confidence domain checks.
DOMAIN_TOL = 1e-9


@dataclass(frozen=True)
class BoundaryConfig:
    """Confidence threshold and class count defining the boundary curve."""

    gamma: float
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if not (1.0 / self.k < self.gamma < 1.0):
            raise ValueError(
                f"gamma must lie in (1/k, 1) = ({1.0 / self.k:.6g}, 1), got {self.gamma}"
            )


@dataclass(frozen=True)
class BoundarySample:
    """One point of the boundary curve: confidence plus the three entropy levels."""

    confidence: float
    u_min: float
    u_max: float
    u_ideal: float


def validate_probs(p) -> np.ndarray:
    """Validate and return a probability vector (1-D, sums to one, K >= 2)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ValueError(f"expected a 1-D probability vector with K >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("probability vector contains non-finite entries")
    if np.any(p < -SUM_TOL) or np.any(p > 1.0 + SUM_TOL):
        raise ValueError("probability entries must lie in [0, 1]")
    total = float(p.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"probabilities must sum to 1 within {SUM_TOL}, got {total!r}")
    return p


def validate_logits(z) -> np.ndarray:
    """Validate and return a logit vector (1-D, finite, K >= 2)."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.shape[0] < 2:
        raise ValueError(f"expected a 1-D logit vector with K >= 2, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("logit vector contains non-finite entries")
    return z


def softmax(z, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along ``axis`` (max-subtraction form)."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("softmax input contains non-finite entries")
    shifted = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def confidence(p) -> tuple[int, float]:
    """Predicted label and its probability; ties break toward the lowest index."""
    p = validate_probs(p)
    label = int(np.argmax(p))
    return label, float(p[label])


def entropy(p, axis: int = -1):
    """Shannon entropy in nats, with 0 * log 0 treated as 0.

    Accepts a single vector or a batch; reduces along ``axis``.
    """
    p = np.asarray(p, dtype=float)
    logp = np.log(np.clip(p, LOG_FLOOR, None))
    out = -np.sum(p * logp, axis=axis)
    return float(out) if np.ndim(out) == 0 else out


def _check_phat_domain(p_hat: np.ndarray, k: int) -> None:
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    lo = 1.0 / k
    if np.any(p_hat < lo - DOMAIN_TOL) or np.any(p_hat > 1.0 + DOMAIN_TOL):
        raise ValueError(f"confidence must lie in [1/k, 1] = [{lo:.6g}, 1]")


def u_max(p_hat, k: int):
    """Largest entropy achievable at confidence ``p_hat`` over ``k`` classes.

    Residual mass (1 - p_hat) spread uniformly over the k - 1 other classes.
    """
    p = np.asarray(p_hat, dtype=float)
    _check_phat_domain(p, k)
    p = np.clip(p, 1.0 / k, 1.0)
    q = 1.0 - p
    out = -p * np.log(np.clip(p, LOG_FLOOR, None)) - q * np.log(
        np.clip(q / (k - 1), LOG_FLOOR, None)
    )
    return float(out) if np.ndim(out) == 0 else out


def u_min(p_hat, k: int):
    """Smallest entropy achievable at confidence ``p_hat`` over ``k`` classes.

    Residual mass (1 - p_hat) concentrated on a single runner-up class.
    For k = 2 this coincides with :func:`u_max`.
    """
    p = np.asarray(p_hat, dtype=float)
    _check_phat_domain(p, k)
    p = np.clip(p, 1.0 / k, 1.0)
    q = 1.0 - p
    out = -p * np.log(np.clip(p, LOG_FLOOR, None)) - q * np.log(np.clip(q, LOG_FLOOR, None))
    return float(out) if np.ndim(out) == 0 else out


def u_ideal(p_hat, cfg: BoundaryConfig):
    """Target entropy at confidence ``p_hat``: the lower bound above ``gamma``,
    the upper bound at or below it (the threshold itself takes the upper branch).
    """
    p = np.asarray(p_hat, dtype=float)
    out = np.where(p > cfg.gamma, u_min(p, cfg.k), u_max(p, cfg.k))
    return float(out) if np.ndim(out) == 0 else out


def feasible_span(p_hat, k: int):
    """Width of the achievable entropy interval: (1 - p_hat) * ln(k - 1)."""
    p = np.asarray(p_hat, dtype=float)
    out = (1.0 - p) * np.log(k - 1)
    return float(out) if np.ndim(out) == 0 else out


def invert_u_max(eta: float, k: int, tol: float = 1e-9) -> float:
    """Confidence at which the upper entropy bound equals ``eta``.

    The upper bound decreases strictly from ln k (at 1/k) to 0 (at 1), so the
    preimage is unique; found by bisection to ``tol``.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if not (0.0 < eta < np.log(k)):
        raise ValueError(f"eta must lie in (0, ln k) = (0, {np.log(k):.6g}), got {eta}")
    f = lambda p: u_max(p, k) - eta
    return float(bisect(f, 1.0 / k, 1.0, xtol=tol))


def boundary_curve(cfg: BoundaryConfig, n_points: int) -> list[BoundarySample]:
    """Sample the boundary at ``n_points`` evenly spaced confidences in [1/k, 1]."""
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    grid = np.linspace(1.0 / cfg.k, 1.0, n_points)
    lo = u_min(grid, cfg.k)
    hi = u_max(grid, cfg.k)
    ideal = u_ideal(grid, cfg)
    return [
        BoundarySample(float(c), float(a), float(b), float(i))
        for c, a, b, i in zip(grid, lo, hi, ideal)
    ]


def boundary_curve_csv_rows(cfg: BoundaryConfig, n_points: int) -> list[str]:
    """CSV lines (header + data, 6 decimal places) for the boundary curve."""
    rows = ["confidence,u_min,u_max,u_ideal"]
    for s in boundary_curve(cfg, n_points):
        rows.append(f"{s.confidence:.6f},{s.u_min:.6f},{s.u_max:.6f},{s.u_ideal:.6f}")
    return rows
