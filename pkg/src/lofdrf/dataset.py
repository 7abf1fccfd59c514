"""Tabular classification data: CSV loading, encoding, holdout splits, bootstrap samples."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"
MISSING_TOKENS = frozenset({"", "?"})
MISSING_CATEGORY = "?"


class DatasetError(ValueError):
    """Base class for input-data problems (bad files, schema mismatches)."""


class MissingFileError(DatasetError):
    pass


class EmptyDataError(DatasetError):
    pass


class RaggedRowsError(DatasetError):
    pass


class LabelColumnError(DatasetError):
    pass


class DegenerateLabelsError(DatasetError):
    pass


class SchemaMismatchError(DatasetError):
    pass


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DatasetError(f"unknown feature kind {self.kind!r} for {self.name!r}")

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL


@dataclass(frozen=True)
class Schema:
    features: tuple[FeatureSpec, ...]
    class_labels: tuple[str, ...]
    label_name: str = "class"

    def to_dict(self) -> dict:
        return {
            "label_name": self.label_name,
            "class_labels": list(self.class_labels),
            "features": [
                {"name": f.name, "kind": f.kind, "categories": list(f.categories)}
                for f in self.features
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Schema":
        feats = tuple(
            FeatureSpec(f["name"], f["kind"], tuple(f.get("categories", ())))
            for f in d["features"]
        )
        return cls(feats, tuple(d["class_labels"]), d.get("label_name", "class"))


@dataclass(frozen=True, eq=False)
class Dataset:
    """An encoded, immutable table of labelled instances.

    ``X`` holds one row per instance: numeric features as floats (NaN marks a
    missing value) and categorical features as the integer index of the
    category in ``FeatureSpec.categories`` (-1 for a category the schema has
    never seen). ``y`` holds indices into ``class_labels``.
    """

    name: str
    schema: Schema
    X: np.ndarray
    y: np.ndarray
    row_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != len(self.schema.features):
            raise SchemaMismatchError(
                f"expected {len(self.schema.features)} feature columns, got shape {X.shape}"
            )
        if y.shape != (X.shape[0],):
            raise SchemaMismatchError("label vector length does not match row count")
        if len(y) and (y.min() < 0 or y.max() >= len(self.schema.class_labels)):
            raise SchemaMismatchError("label index outside class_labels")
        ids = np.arange(len(y)) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64)
        X.setflags(write=False)
        y.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "row_ids", ids)

    @property
    def features(self) -> tuple[FeatureSpec, ...]:
        return self.schema.features

    @property
    def class_labels(self) -> tuple[str, ...]:
        return self.schema.class_labels

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def n_features(self) -> int:
        return len(self.schema.features)

    @property
    def n_classes(self) -> int:
        return len(self.schema.class_labels)

    @property
    def categorical_mask(self) -> np.ndarray:
        return np.array([f.is_categorical for f in self.features], dtype=bool)

    def __len__(self) -> int:
        return self.n

    def instance(self, j: int) -> np.ndarray:
        return self.X[j]

    def subset(self, indices: Iterable[int]) -> "Dataset":
        """Row view selected by position (repeats allowed)."""
        idx = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.int64)
        return Dataset(self.name, self.schema, self.X[idx], self.y[idx], self.row_ids[idx])

    def numeric_medians(self) -> np.ndarray:
        """Per-column median of observed numeric values; NaN for categorical columns."""
        out = np.full(self.n_features, np.nan)
        for j, f in enumerate(self.features):
            if f.is_categorical:
                continue
            col = self.X[:, j]
            col = col[~np.isnan(col)]
            out[j] = float(np.median(col)) if len(col) else 0.0
        return out

    def impute(self, fill_values: np.ndarray) -> "Dataset":
        """Replace missing numeric values column-wise with ``fill_values``."""
        if not np.isnan(self.X).any():
            return self
        X = self.X.copy()
        for j, f in enumerate(self.features):
            if not f.is_categorical:
                col = X[:, j]
                col[np.isnan(col)] = fill_values[j]
        return Dataset(self.name, self.schema, X, self.y, self.row_ids)

    def decode_label(self, index: int) -> str:
        return self.class_labels[index]


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int
    train_fraction: float
    train_indices: np.ndarray
    test_indices: np.ndarray


@dataclass(frozen=True)
class BootstrapSample:
    in_bag: np.ndarray
    out_of_bag: np.ndarray

    @property
    def n(self) -> int:
        return len(self.in_bag)


def _is_number(token: str) -> bool:
    try:
        return math.isfinite(float(token))
    except ValueError:
        return False


def read_schema_overrides(path: str | Path) -> dict[str, str]:
    """Parse a ``name:kind`` per line override file; ``#`` starts a comment."""
    overrides = {}
    p = Path(path)
    if not p.is_file():
        raise MissingFileError(f"schema file not found: {p}")
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, kind = line.rpartition(":")
        kind = kind.strip().lower()
        if not sep or kind not in (NUMERIC, CATEGORICAL):
            raise DatasetError(f"{p}:{lineno}: expected 'name:numeric' or 'name:categorical'")
        overrides[name.strip()] = kind
    return overrides


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.is_file():
        raise MissingFileError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if header is None:
        raise EmptyDataError(f"{path}: file is empty")
    header = [h.strip() for h in header]
    if not rows:
        raise EmptyDataError(f"{path}: no data rows after header")
    for i, r in enumerate(rows, 2):
        if len(r) != len(header):
            raise RaggedRowsError(f"{path}:{i}: expected {len(header)} fields, found {len(r)}")
    return header, [[c.strip() for c in r] for r in rows]


def _resolve_label(header: Sequence[str], label_column: str | int) -> int:
    if isinstance(label_column, str) and label_column in header:
        return header.index(label_column)
    try:
        idx = int(label_column)
    except (TypeError, ValueError):
        raise LabelColumnError(f"label column {label_column!r} not in header {list(header)}") from None
    if not -len(header) <= idx < len(header):
        raise LabelColumnError(f"label column index {idx} out of range")
    return idx % len(header)


def _first_appearance(values: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(values))


def _categorical_token(v: str) -> str:
    return MISSING_CATEGORY if v in MISSING_TOKENS else v


def _encode_column(values: list[str], spec: FeatureSpec) -> np.ndarray:
    if spec.is_categorical:
        index = {c: i for i, c in enumerate(spec.categories)}
        return np.array([index.get(_categorical_token(v), -1) for v in values], dtype=np.float64)
    out = np.empty(len(values))
    for i, v in enumerate(values):
        if v in MISSING_TOKENS:
            out[i] = np.nan
            continue
        try:
            out[i] = float(v)
        except ValueError:
            raise SchemaMismatchError(f"non-numeric value {v!r} in numeric feature {spec.name!r}") from None
        if not math.isfinite(out[i]):
            raise SchemaMismatchError(f"non-finite value {v!r} in numeric feature {spec.name!r}")
    return out


def load_csv(
    path: str | Path,
    label_column: str | int = -1,
    *,
    schema: Schema | None = None,
    kind_overrides: Mapping[str, str] | None = None,
    name: str | None = None,
) -> Dataset:
    """Load a headered CSV file into an encoded :class:`Dataset`.

    Parameters
    ----------
    path : str or Path
        UTF-8, comma separated, RFC 4180 quoting, one header row.
    label_column : str or int
        Header name or (possibly negative) column position of the class label.
        Defaults to the last column.
    schema : Schema, optional
        Encode against an existing schema (e.g. a trained forest's) instead of
        inferring one. Columns are matched by name; unseen categories encode as
        -1, unseen labels are an error.
    kind_overrides : mapping, optional
        ``feature name -> "numeric" | "categorical"``; wins over inference.
    """
    path = Path(path)
    header, rows = _read_rows(path)
    label_idx = _resolve_label(header, label_column)
    columns = list(zip(*rows))
    label_values = list(columns[label_idx])
    feature_idx = [j for j in range(len(header)) if j != label_idx]

    if schema is None:
        overrides = dict(kind_overrides or {})
        unknown = set(overrides) - {header[j] for j in feature_idx}
        if unknown:
            raise SchemaMismatchError(f"schema overrides name unknown features: {sorted(unknown)}")
        feats = []
        for j in feature_idx:
            col = columns[j]
            kind = overrides.get(header[j])
            if kind is None:
                observed = [v for v in col if v not in MISSING_TOKENS]
                kind = NUMERIC if observed and all(_is_number(v) for v in observed) else CATEGORICAL
            cats = _first_appearance(_categorical_token(v) for v in col) if kind == CATEGORICAL else ()
            feats.append(FeatureSpec(header[j], kind, cats))
        labels = _first_appearance(label_values)
        if len(labels) < 2:
            raise DegenerateLabelsError(f"{path}: degenerate labels, only {list(labels)} present")
        schema = Schema(tuple(feats), labels, header[label_idx])
        ordered = feature_idx
    else:
        by_name = {header[j]: j for j in feature_idx}
        missing = [f.name for f in schema.features if f.name not in by_name]
        if missing:
            raise SchemaMismatchError(f"{path}: missing feature columns {missing}")
        ordered = [by_name[f.name] for f in schema.features]
        unseen = sorted(set(label_values) - set(schema.class_labels))
        if unseen:
            raise SchemaMismatchError(f"{path}: labels {unseen} not in trained label set")

    X = np.column_stack(
        [_encode_column(list(columns[j]), f) for j, f in zip(ordered, schema.features)]
    ) if schema.features else np.empty((len(rows), 0))
    label_index = {c: i for i, c in enumerate(schema.class_labels)}
    y = np.array([label_index[v] for v in label_values], dtype=np.int64)
    return Dataset(name or path.stem, schema, X, y)


def arff_to_csv(src: str | Path, dst: str | Path) -> Path:
    """Flatten an attribute-relation (ARFF) file into a headered CSV."""
    from scipy.io import arff

    src, dst = Path(src), Path(dst)
    if not src.is_file():
        raise MissingFileError(f"arff file not found: {src}")
    try:
        data, meta = arff.loadarff(str(src))
    except Exception as exc:  # scipy raises several unrelated types
        raise DatasetError(f"{src}: cannot parse ARFF: {exc}") from exc
    names = list(meta.names())
    with dst.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for rec in data:
            out = []
            for v in rec:
                if isinstance(v, bytes):
                    out.append(v.decode("utf-8"))
                elif isinstance(v, float) and math.isnan(v):
                    out.append("?")
                else:
                    out.append(repr(float(v)) if isinstance(v, float) else str(v))
            w.writerow(out)
    return dst


def holdout_split(d: Dataset, train_fraction: float = 0.66, seed: int = 0) -> SplitPair:
    """Shuffle rows with ``seed`` and cut the permutation at ``round(fraction * n)``.

    Rounding is half-up. Missing numeric values in both halves are filled with
    the medians of the training half only.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if d.n < 2:
        raise ValueError("holdout split needs at least 2 rows")
    n_train = min(max(int(math.floor(train_fraction * d.n + 0.5)), 1), d.n - 1)
    perm = np.random.default_rng(seed).permutation(d.n)
    tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    train, test = d.subset(tr), d.subset(te)
    fill = train.numeric_medians()
    return SplitPair(train.impute(fill), test.impute(fill), seed, train_fraction, tr, te)


def bootstrap_sample(n: int, rng: np.random.Generator) -> BootstrapSample:
    if n < 1:
        raise ValueError("bootstrap needs n >= 1")
    in_bag = rng.integers(0, n, size=n)
    seen = np.zeros(n, dtype=bool)
    seen[in_bag] = True
    return BootstrapSample(in_bag, np.flatnonzero(~seen))


def bundled_path(name: str) -> Path:
    """Path to a dataset shipped with the package (``diabetes``, ``breast-cancer``)."""
    fname = name if name.endswith(".csv") else f"{name}.csv"
    p = Path(str(resources.files("lofdrf") / "data" / fname))
    if not p.is_file():
        raise MissingFileError(f"no bundled dataset {name!r}")
    return p


def load_bundled(name: str) -> Dataset:
    path = bundled_path(name)
    schema_file = path.with_suffix(".schema")
    overrides = read_schema_overrides(schema_file) if schema_file.is_file() else None
    return load_csv(path, -1, kind_overrides=overrides, name=path.stem)
