import numpy as np
import pytest

from cubcal.records import PredictionRecord


def random_record_batch(rng: np.random.Generator, n: int = 50, k: int = 3,
                        mc: bool = False) -> list[PredictionRecord]:
    """Batch of records with varied confidence/entropy and a mix of correct
    and wrong predictions."""
    records = []
    for i in range(n):
        label = int(rng.integers(k))
        scale = float(rng.uniform(0.3, 4.0))
        if mc:
            z = rng.normal(0.0, scale, size=(int(rng.integers(2, 8)), k))
            z[:, label] += rng.uniform(-1.0, 3.0)
            records.append(PredictionRecord.from_mc_logits(label, z, f"r{i}"))
        else:
            z = rng.normal(0.0, scale, size=k)
            z[label] += rng.uniform(-1.0, 3.0)
            records.append(PredictionRecord.from_mean_logits(label, z, f"r{i}"))
    return records


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
