"""Unpruned CART classification trees with per-node random feature subsets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import BootstrapSample, Dataset

# Decreases at or below this are treated as float noise, not a real split.
MIN_DECREASE = 1e-12


@dataclass(frozen=True)
class Split:
    feature: int
    categorical: bool
    # numeric: threshold, value <= threshold goes left
    # categorical: category code, code == value goes left, everything else right
    value: float
    decrease: float

    def goes_left(self, x: float) -> bool:
        return x == self.value if self.categorical else x <= self.value


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Flat, array-backed binary tree.

    Node 0 is the root and nodes are stored in preorder. For a leaf,
    ``feature == -1`` and ``left == right == -1``. ``label`` holds the modal
    training label at every node, which is the prediction at leaves.
    """

    feature: np.ndarray
    value: np.ndarray
    categorical: np.ndarray
    left: np.ndarray
    right: np.ndarray
    parent: np.ndarray
    label: np.ndarray
    n_classes: int
    feature_subset_size: int
    n_samples: int
    n_distinct: int

    def __post_init__(self):
        for name, dtype in (("feature", np.int64), ("value", np.float64), ("categorical", bool),
                            ("left", np.int64), ("right", np.int64), ("parent", np.int64),
                            ("label", np.int64)):
            arr = np.asarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for i in range(1, self.node_count):
            depths[i] = depths[self.parent[i]] + 1
        return int(depths.max())

    def to_record(self) -> dict:
        """JSON-ready node list; every float is stored with repr precision."""
        internal = ~self.is_leaf
        return {
            "n_classes": self.n_classes,
            "feature_subset_size": self.feature_subset_size,
            "n_samples": self.n_samples,
            "n_distinct": self.n_distinct,
            "nodes": {
                "parent": self.parent.tolist(),
                "feature": self.feature.tolist(),
                "categorical": [bool(c) for c in self.categorical],
                "value": [float(v) if i else None for v, i in zip(self.value, internal)],
                "left": self.left.tolist(),
                "right": self.right.tolist(),
                "label": self.label.tolist(),
            },
        }

    @classmethod
    def from_record(cls, rec: dict) -> "DecisionTree":
        nodes = rec["nodes"]
        return cls(
            feature=nodes["feature"],
            value=[0.0 if v is None else v for v in nodes["value"]],
            categorical=nodes["categorical"],
            left=nodes["left"],
            right=nodes["right"],
            parent=nodes["parent"],
            label=nodes["label"],
            n_classes=rec["n_classes"],
            feature_subset_size=rec["feature_subset_size"],
            n_samples=rec["n_samples"],
            n_distinct=rec["n_distinct"],
        )

    def __eq__(self, other):
        if not isinstance(other, DecisionTree):
            return NotImplemented
        return self.to_record() == other.to_record()

    __hash__ = None


def default_subset_size(n_features: int) -> int:
    return max(1, int(math.isqrt(n_features)))


def _numeric_best(v, ys, n_classes, total_sq_over_m):
    m = len(v)
    order = np.argsort(v, kind="stable")
    vs = v[order]
    boundaries = np.flatnonzero(vs[:-1] != vs[1:])
    if boundaries.size == 0:
        return None
    onehot = np.zeros((m, n_classes))
    onehot[np.arange(m), ys[order]] = 1.0
    cum = np.cumsum(onehot, axis=0)
    lc = cum[boundaries]
    rc = cum[-1] - lc
    nl = (boundaries + 1).astype(np.float64)
    nr = m - nl
    score = (lc * lc).sum(axis=1) / nl + (rc * rc).sum(axis=1) / nr
    b = int(np.argmax(score))
    lo, hi = vs[boundaries[b]], vs[boundaries[b] + 1]
    threshold = lo + (hi - lo) / 2.0
    if not lo <= threshold < hi:
        threshold = lo
    return (score[b] - total_sq_over_m) / m, float(threshold)


def _categorical_best(codes, ys, n_classes, total_sq_over_m):
    m = len(codes)
    cats, inv = np.unique(codes, return_inverse=True)
    if cats.size < 2:
        return None
    counts = np.bincount(inv * n_classes + ys, minlength=cats.size * n_classes)
    lc = counts.reshape(cats.size, n_classes).astype(np.float64)
    rc = lc.sum(axis=0) - lc
    nl = lc.sum(axis=1)
    nr = m - nl
    score = (lc * lc).sum(axis=1) / nl + (rc * rc).sum(axis=1) / nr
    b = int(np.argmax(score))
    return (score[b] - total_sq_over_m) / m, float(cats[b])


def best_split(X, y, rows, candidates, categorical_mask, n_classes) -> Split | None:
    """Best Gini-decrease split of ``rows`` over the ``candidates`` feature columns.

    Candidates are scanned in the given order and a later candidate only wins
    with a strictly larger decrease. Returns None when no split decreases
    impurity.
    """
    rows = np.asarray(rows)
    ys = y[rows]
    m = len(rows)
    counts = np.bincount(ys, minlength=n_classes).astype(np.float64)
    total_sq_over_m = float(counts @ counts) / m
    best = None
    for f in candidates:
        col = X[rows, f]
        if categorical_mask[f]:
            found = _categorical_best(col.astype(np.int64), ys, n_classes, total_sq_over_m)
        else:
            found = _numeric_best(col, ys, n_classes, total_sq_over_m)
        if found is None:
            continue
        decrease, value = found
        if decrease > MIN_DECREASE and (best is None or decrease > best.decrease):
            best = Split(int(f), bool(categorical_mask[f]), value, float(decrease))
    return best


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - p @ p)


def grow_tree(train: Dataset, sample: BootstrapSample, S: int, rng: np.random.Generator) -> DecisionTree:
    """Grow an unpruned tree on the in-bag rows of ``sample``.

    Nodes are expanded depth first, left child before right, drawing ``S``
    distinct candidate features at every node. A node becomes a leaf when it
    is pure, holds fewer than 2 rows, or no candidate split decreases Gini
    impurity.
    """
    p = train.n_features
    if not 1 <= S <= p:
        raise ValueError(f"feature subset size must be in [1, {p}], got {S}")
    X, y = train.X, train.y
    if np.isnan(X[:, ~train.categorical_mask]).any():
        raise ValueError("training data has missing numeric values; impute before growing")
    cat_mask = train.categorical_mask
    C = train.n_classes

    feature, value, categorical, left, right, parent, label = [], [], [], [], [], [], []

    def new_node(par, rows):
        counts = np.bincount(y[rows], minlength=C)
        feature.append(-1)
        value.append(0.0)
        categorical.append(False)
        left.append(-1)
        right.append(-1)
        parent.append(par)
        label.append(int(np.argmax(counts)))
        return len(feature) - 1, counts

    root_rows = np.asarray(sample.in_bag, dtype=np.int64)
    stack = [(root_rows, -1, None)]
    while stack:
        rows, par, side = stack.pop()
        node, counts = new_node(par, rows)
        if side is not None:
            (left if side == 0 else right)[par] = node
        if len(rows) < 2 or np.count_nonzero(counts) <= 1:
            continue
        candidates = rng.choice(p, size=S, replace=False)
        split = best_split(X, y, rows, candidates, cat_mask, C)
        if split is None:
            continue
        col = X[rows, split.feature]
        go_left = col == split.value if split.categorical else col <= split.value
        feature[node] = split.feature
        value[node] = split.value
        categorical[node] = split.categorical
        # right pushed first so the left subtree is expanded first (preorder)
        stack.append((rows[~go_left], node, 1))
        stack.append((rows[go_left], node, 0))

    return DecisionTree(
        feature, value, categorical, left, right, parent, label,
        n_classes=C,
        feature_subset_size=S,
        n_samples=len(root_rows),
        n_distinct=int(np.unique(root_rows).size),
    )


def predict_tree(t: DecisionTree, x) -> int:
    """Route a single encoded instance to a leaf and return its label index."""
    x = np.asarray(x, dtype=np.float64)
    node = 0
    while t.feature[node] >= 0:
        f = t.feature[node]
        if f >= len(x):
            raise ValueError(f"instance has {len(x)} features, tree splits on feature {f}")
        v = x[f]
        go_left = v == t.value[node] if t.categorical[node] else v <= t.value[node]
        node = t.left[node] if go_left else t.right[node]
    return int(t.label[node])


def predict_rows(t: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Vectorized :func:`predict_tree` over every row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected a 2-D instance matrix")
    if t.node_count > 1 and t.feature.max() >= X.shape[1]:
        raise ValueError("instance matrix has fewer columns than the tree uses")
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = np.arange(X.shape[0])
    while active.size:
        nd = node[active]
        internal = t.feature[nd] >= 0
        active, nd = active[internal], nd[internal]
        if not active.size:
            break
        xv = X[active, t.feature[nd]]
        go_left = np.where(t.categorical[nd], xv == t.value[nd], xv <= t.value[nd])
        node[active] = np.where(go_left, t.left[nd], t.right[nd])
    return t.label[node]


def tree_accuracy(t: DecisionTree, d: Dataset) -> float:
    if d.n == 0:
        raise ValueError("accuracy of an empty dataset is undefined")
    return float(np.mean(predict_rows(t, d.X) == d.y))
