"""LOF-based tree selection: score, weight and keep the top-k trees of a parent forest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .forest import Forest, ModelFileError, majority_vote, predict_matrix
from .lof import PointSet, local_outlier_factor

PRUNED_FORMAT = "lofdrf-pruned"
PRUNED_VERSION = 1


@dataclass(frozen=True)
class WeightedTree:
    tree_index: int
    raw_lof: float
    normalized_lof: float
    accuracy: float
    weight: float


@dataclass(frozen=True, eq=False)
class PrunedForest:
    parent: Forest
    selected: tuple[int, ...]
    weights: tuple[WeightedTree, ...]
    inverted: bool = False

    @property
    def k(self) -> int:
        return len(self.selected)

    @property
    def trees(self):
        return tuple(self.parent.trees[i] for i in self.selected)

    @property
    def class_labels(self):
        return self.parent.class_labels

    @property
    def n_classes(self) -> int:
        return self.parent.n_classes

    def prepare(self, d: Dataset) -> np.ndarray:
        return self.parent.prepare(d)

    @property
    def pruning_level(self) -> float:
        return pruning_level(self.parent.n_trees, self.k)

    def to_json(self, parent_path: str | Path, parent_sha256: str) -> str:
        return json.dumps(
            {
                "format": PRUNED_FORMAT,
                "version": PRUNED_VERSION,
                "parent": {"path": str(parent_path), "sha256": parent_sha256},
                "parent_size": self.parent.n_trees,
                "k": self.k,
                "ranking": "ascending (non-paper)" if self.inverted else "descending",
                "selected": list(self.selected),
                "weights": [asdict(w) for w in self.weights],
            },
            separators=(",", ":"),
            allow_nan=False,
        )

    def save(self, path: str | Path, parent_path: str | Path) -> Path:
        """Write the selection; the parent forest file is referenced, never copied."""
        path = Path(path)
        parent_path = Path(parent_path)
        digest = file_sha256(parent_path)
        if self.parent.to_json() != parent_path.read_text(encoding="utf-8"):
            raise ModelFileError(f"{parent_path} does not hold this pruned forest's parent")
        path.write_text(self.to_json(parent_path, digest), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path, parent: Forest | None = None) -> "PrunedForest":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"model file not found: {path}")
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"not a pruned-forest file: {exc}") from None
        if obj.get("format") != PRUNED_FORMAT:
            raise ModelFileError(f"not a pruned-forest file (format={obj.get('format')!r})")
        if obj.get("version") != PRUNED_VERSION:
            raise ModelFileError(f"unsupported pruned-forest version {obj.get('version')}")
        if parent is None:
            ppath = Path(obj["parent"]["path"])
            if not ppath.is_absolute() and not ppath.is_file():
                ppath = path.parent / ppath
            if not ppath.is_file():
                raise FileNotFoundError(f"parent forest not found: {ppath}")
            if file_sha256(ppath) != obj["parent"]["sha256"]:
                raise ModelFileError(f"parent forest {ppath} changed since pruning (hash mismatch)")
            parent = Forest.load(ppath)
        if parent.n_trees != obj["parent_size"]:
            raise ModelFileError("parent forest size disagrees with the pruned model")
        weights = tuple(WeightedTree(**w) for w in obj["weights"])
        return cls(parent, tuple(obj["selected"]), weights, obj["ranking"] != "descending")


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def weight_trees(f: Forest, train: Dataset, k_lof: int = 10) -> list[WeightedTree]:
    """Score every tree of ``f`` by LOF of its training-set prediction vector times its accuracy.

    Prediction vectors cover all of ``train`` (in-bag and out-of-bag rows
    alike), so the accuracies are optimistic for the in-bag part.
    """
    if not 1 <= k_lof <= f.n_trees - 1:
        raise ValueError(f"k_lof must be in [1, {f.n_trees - 1}] for a forest of {f.n_trees} trees")
    if train.n == 0:
        raise ValueError("training set is empty")
    X = f.prepare(train)
    P = predict_matrix(f.trees, X)
    accuracy = (P == train.y[None, :]).mean(axis=1)
    result = local_outlier_factor(PointSet.from_predictions(P), k_lof)
    return [
        WeightedTree(i, float(result.raw[i]), float(result.normalized[i]), float(accuracy[i]),
                     float(result.normalized[i]) * float(accuracy[i]))
        for i in range(f.n_trees)
    ]


def rank_trees(weights: Sequence[WeightedTree], invert: bool = False) -> list[WeightedTree]:
    """Descending weight, ties by ascending tree index (``invert``: ascending weight)."""
    sign = 1.0 if invert else -1.0
    return sorted(weights, key=lambda w: (sign * w.weight, w.tree_index))


def select_top_k(weights: Sequence[WeightedTree], k: int, parent: Forest | None = None,
                 invert: bool = False) -> PrunedForest:
    if not 1 <= k <= len(weights):
        raise ValueError(f"k must be in [1, {len(weights)}], got {k}")
    chosen = tuple(rank_trees(weights, invert)[:k])
    return PrunedForest(parent, tuple(w.tree_index for w in chosen), chosen, invert)


def pruning_level(parent_size: int, child_size: int) -> float:
    """Percentage by which the child ensemble is smaller than its parent."""
    if parent_size < 1 or child_size < 1:
        raise ValueError("ensemble sizes must be positive")
    if child_size > parent_size:
        raise ValueError(f"child ({child_size}) larger than parent ({parent_size})")
    return 100 * (parent_size - child_size) / parent_size


def classify_pruned(p: PrunedForest, x) -> int:
    if p.k == 0:
        raise ValueError("pruned forest has no trees")
    return majority_vote(p.trees, x)
