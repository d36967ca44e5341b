"""Per-sample prediction records and the JSON-Lines logit dump format.

A record bundles a true label with either Monte-Carlo sample logits (S x K)
or plain mean logits (K,), plus the derived predictive distribution,
predicted label, confidence and entropy. Dumps produced by any upstream
model can be ingested as long as each line carries ``label`` and either
``mc_logits`` or ``mean_logits``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .boundary import entropy, softmax


class DumpFormatError(ValueError):
    """Raised for malformed or inconsistent logit dump files."""


@dataclass(frozen=True, eq=False)
class PredictionRecord:
    label: int
    mean_logits: np.ndarray
    mean_probs: np.ndarray
    pred: int
    confidence: float
    uncertainty: float
    sample_logits: np.ndarray | None = None
    record_id: str | None = None

    @property
    def k(self) -> int:
        return int(self.mean_probs.shape[0])

    @property
    def accurate(self) -> bool:
        return self.pred == self.label

    @classmethod
    def from_mc_logits(cls, label, sample_logits, record_id=None) -> "PredictionRecord":
        """Build a record from S x K Monte-Carlo logits (Eq.-style averaging:
        probabilities are the mean of the per-sample softmax outputs)."""
        z = np.asarray(sample_logits, dtype=float)
        if z.ndim != 2 or z.shape[0] < 1 or z.shape[1] < 2:
            raise ValueError(f"sample_logits must be S x K with S >= 1, K >= 2, got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("sample_logits contain non-finite entries")
        probs = softmax(z, axis=-1).mean(axis=0)
        mean_z = z.mean(axis=0)
        pred = int(np.argmax(probs))
        return cls(
            label=int(label),
            mean_logits=mean_z,
            mean_probs=probs,
            pred=pred,
            confidence=float(probs[pred]),
            uncertainty=entropy(probs),
            sample_logits=z,
            record_id=record_id,
        )

    @classmethod
    def from_mean_logits(cls, label, mean_logits, record_id=None) -> "PredictionRecord":
        """Build a record from a single K-vector of logits."""
        z = np.asarray(mean_logits, dtype=float)
        if z.ndim != 1 or z.shape[0] < 2:
            raise ValueError(f"mean_logits must be a K-vector with K >= 2, got shape {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("mean_logits contain non-finite entries")
        probs = softmax(z)
        pred = int(np.argmax(probs))
        return cls(
            label=int(label),
            mean_logits=z,
            mean_probs=probs,
            pred=pred,
            confidence=float(probs[pred]),
            uncertainty=entropy(probs),
            sample_logits=None,
            record_id=record_id,
        )


def read_logit_dump(path) -> list[PredictionRecord]:
    """Parse a JSON-Lines logit dump; errors cite the offending line number."""
    records: list[PredictionRecord] = []
    k_seen: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DumpFormatError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DumpFormatError(f"{path}: line {lineno}: expected a JSON object")
            if "label" not in obj:
                raise DumpFormatError(f"{path}: line {lineno}: missing 'label'")
            rid = obj.get("id")
            try:
                if obj.get("mc_logits") is not None:
                    rec = PredictionRecord.from_mc_logits(obj["label"], obj["mc_logits"], rid)
                elif obj.get("mean_logits") is not None:
                    rec = PredictionRecord.from_mean_logits(obj["label"], obj["mean_logits"], rid)
                else:
                    raise ValueError("needs either 'mc_logits' or 'mean_logits'")
            except (ValueError, TypeError) as exc:
                raise DumpFormatError(f"{path}: line {lineno}: {exc}") from exc
            if k_seen is None:
                k_seen = rec.k
            elif rec.k != k_seen:
                raise DumpFormatError(
                    f"{path}: line {lineno}: class count {rec.k} differs from earlier lines ({k_seen})"
                )
            if not (0 <= rec.label < rec.k):
                raise DumpFormatError(
                    f"{path}: line {lineno}: label {rec.label} outside [0, {rec.k})"
                )
            records.append(rec)
    if not records:
        raise DumpFormatError(f"{path}: dump contains no records")
    return records


def write_logit_dump(path, records) -> None:
    """Write records as JSON Lines; MC logits are kept when present."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj: dict = {"label": int(rec.label)}
            if rec.record_id is not None:
                obj["id"] = rec.record_id
            if rec.sample_logits is not None:
                obj["mc_logits"] = np.asarray(rec.sample_logits).tolist()
            else:
                obj["mean_logits"] = np.asarray(rec.mean_logits).tolist()
            fh.write(json.dumps(obj) + "\n")
