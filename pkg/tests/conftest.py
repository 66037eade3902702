import numpy as np
import pytest

from plagiart.store import Dataset, ImageRecord


def make_dataset(rows, labels=None, splits=None, ids=None):
    """Build a small Dataset from a list of vectors plus optional metadata."""
    rows = np.asarray(rows, dtype=np.float32)
    n = rows.shape[0]
    labels = labels or ["van_gogh"] * n
    splits = splits or ["train"] * n
    ids = ids or [f"img_{i:03d}" for i in range(n)]
    records = [ImageRecord(id=ids[i], label=labels[i], split=splits[i],
                           path=f"/img/{ids[i]}.jpg") for i in range(n)]
    return Dataset(records, rows)


@pytest.fixture
def tiny_train_dataset():
    """2 van_gogh + 1 plagiarized + 1 other, all in the train split."""
    return make_dataset(
        [[1.0, 0.0], [0.9, 0.1], [0.8, 0.2], [0.0, 1.0]],
        labels=["van_gogh", "van_gogh", "plagiarized", "other"],
        ids=["vg_a", "vg_b", "plag_a", "oth_a"],
    )
