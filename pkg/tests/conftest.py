import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lofdrf.dataset import Dataset, FeatureSpec, Schema  # noqa: E402


def make_dataset(X, y, labels=None, kinds=None, categories=None, name="toy"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y)
    p = X.shape[1]
    kinds = kinds or ["numeric"] * p
    categories = categories or {}
    feats = tuple(
        FeatureSpec(f"f{j}", kinds[j], tuple(categories.get(j, ())))
        for j in range(p)
    )
    if labels is None:
        labels = tuple(str(c) for c in range(int(y.max()) + 1 if len(y) else 2))
        labels = labels if len(labels) >= 2 else ("0", "1")
    return Dataset(name, Schema(feats, tuple(labels)), X, y)


def random_toy(rng, n=None, p=3, n_classes=2):
    n = n or int(rng.integers(15, 40))
    X = rng.integers(0, 5, size=(n, p)).astype(float)
    y = rng.integers(0, n_classes, size=n)
    y[:n_classes] = np.arange(n_classes)
    return make_dataset(X, y, labels=tuple("ABCDE"[:n_classes]))


@pytest.fixture
def write_csv(tmp_path):
    def _write(text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    return _write
