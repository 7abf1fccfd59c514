"""Random Forest construction, majority voting and per-tree prediction vectors."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset, Schema
from .seeding import tree_rng
from .tree import DecisionTree, default_subset_size, grow_tree, predict_rows, predict_tree

FOREST_FORMAT = "lofdrf-forest"
FOREST_VERSION = 1


class ModelFileError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple[DecisionTree, ...]
    master_seed: int
    feature_subset_size: int
    schema: Schema
    fill_values: np.ndarray

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def class_labels(self) -> tuple[str, ...]:
        return self.schema.class_labels

    @property
    def n_classes(self) -> int:
        return len(self.schema.class_labels)

    def prepare(self, d: Dataset) -> np.ndarray:
        """Instance matrix of ``d`` with missing numerics filled by training medians."""
        check_schema(self.schema, d)
        return d.impute(self.fill_values).X

    def to_json(self) -> str:
        header = {
            "format": FOREST_FORMAT,
            "version": FOREST_VERSION,
            "n_trees": self.n_trees,
            "feature_subset_size": self.feature_subset_size,
            "master_seed": self.master_seed,
            "class_labels": list(self.class_labels),
            "schema": self.schema.to_dict(),
            "fill_values": [None if np.isnan(v) else float(v) for v in self.fill_values],
        }
        header["trees"] = [t.to_record() for t in self.trees]
        return json.dumps(header, separators=(",", ":"), allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "Forest":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"not a forest file: {exc}") from None
        if obj.get("format") != FOREST_FORMAT:
            raise ModelFileError(f"not a forest file (format={obj.get('format')!r})")
        if obj.get("version") != FOREST_VERSION:
            raise ModelFileError(f"unsupported forest version {obj.get('version')}")
        trees = tuple(DecisionTree.from_record(r) for r in obj["trees"])
        if len(trees) != obj["n_trees"]:
            raise ModelFileError("tree count does not match header")
        schema = Schema.from_dict(obj["schema"])
        if list(schema.class_labels) != obj["class_labels"]:
            raise ModelFileError("label order in header disagrees with schema")
        fill = np.array([np.nan if v is None else v for v in obj["fill_values"]], dtype=np.float64)
        return cls(trees, obj["master_seed"], obj["feature_subset_size"], schema, fill)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Forest":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"model file not found: {path}")
        return cls.from_json(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class PredictionVector:
    tree_index: int
    labels: np.ndarray


def check_schema(schema: Schema, d: Dataset) -> None:
    from .dataset import SchemaMismatchError

    if d.schema == schema:
        return
    if [f.name for f in d.features] != [f.name for f in schema.features] or [
        f.kind for f in d.features
    ] != [f.kind for f in schema.features]:
        raise SchemaMismatchError("dataset features do not match the model schema")
    if d.class_labels != schema.class_labels:
        raise SchemaMismatchError(
            f"label order {list(d.class_labels)} differs from model {list(schema.class_labels)}"
        )
    for a, b in zip(d.features, schema.features):
        if a.categories != b.categories:
            raise SchemaMismatchError(
                f"category codes of {a.name!r} differ from the model; reload the data with the model schema"
            )


def _grow_one(train: Dataset, i: int, S: int, master_seed: int) -> DecisionTree:
    from .dataset import bootstrap_sample

    rng = tree_rng(master_seed, i)
    sample = bootstrap_sample(train.n, rng)
    return grow_tree(train, sample, S, rng)


def _grow_chunk(args):
    train, indices, S, master_seed = args
    return [_grow_one(train, i, S, master_seed) for i in indices]


def build_forest(
    train: Dataset,
    N: int = 500,
    S: int | None = None,
    master_seed: int = 0,
    jobs: int = 1,
) -> Forest:
    """Grow ``N`` trees, tree ``i`` from its own generator seeded by ``(master_seed, i)``.

    Because every tree owns its generator, the result does not depend on
    ``jobs``.
    """
    if N < 1:
        raise ValueError(f"forest size must be >= 1, got {N}")
    if S is None:
        S = default_subset_size(train.n_features)
    if not 1 <= S <= train.n_features:
        raise ValueError(f"feature subset size must be in [1, {train.n_features}], got {S}")
    fill = train.numeric_medians()
    train = train.impute(fill)
    if jobs > 1 and N > 1:
        chunks = [list(range(N))[j::jobs] for j in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            grown = list(pool.map(_grow_chunk, [(train, c, S, master_seed) for c in chunks]))
        trees: list = [None] * N
        for c, ts in zip(chunks, grown):
            for i, t in zip(c, ts):
                trees[i] = t
    else:
        trees = [_grow_one(train, i, S, master_seed) for i in range(N)]
    return Forest(tuple(trees), int(master_seed), int(S), train.schema, fill)


def vote_counts(predictions: np.ndarray, n_classes: int) -> np.ndarray:
    """Per-instance label tallies from a ``(n_trees, n)`` prediction matrix."""
    predictions = np.asarray(predictions, dtype=np.int64)
    n = predictions.shape[1]
    counts = np.zeros((n, n_classes), dtype=np.int64)
    for row in predictions:
        counts[np.arange(n), row] += 1
    return counts


def majority_vote(trees: Sequence[DecisionTree], x) -> int:
    """Plurality label over ``trees``; ties go to the earliest label in class order."""
    if len(trees) == 0:
        raise ValueError("cannot vote with an empty ensemble")
    counts = np.zeros(trees[0].n_classes, dtype=np.int64)
    for t in trees:
        counts[predict_tree(t, x)] += 1
    return int(np.argmax(counts))


def predict_matrix(trees: Sequence[DecisionTree], X: np.ndarray) -> np.ndarray:
    """``(len(trees), n)`` matrix of every tree's label for every row."""
    return np.stack([predict_rows(t, X) for t in trees]) if len(trees) else np.empty((0, len(X)), np.int64)


def predict_forest(trees: Sequence[DecisionTree], X: np.ndarray, n_classes: int) -> np.ndarray:
    if len(trees) == 0:
        raise ValueError("cannot vote with an empty ensemble")
    return np.argmax(vote_counts(predict_matrix(trees, X), n_classes), axis=1)


def prediction_vector(t: DecisionTree, d: Dataset, tree_index: int = 0) -> PredictionVector:
    if d.n == 0:
        raise ValueError("prediction vector of an empty dataset")
    return PredictionVector(tree_index, predict_rows(t, d.X))
