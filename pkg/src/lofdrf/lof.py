"""Local Outlier Factor over an arbitrary distance, plus min-max score normalization.

Duplicate handling: a point with at least ``k`` exact duplicates has a
k-distance of 0, every reachability distance to its neighbours is 0 and its
local reachability density is infinite. Such points get ``lrd = inf`` and
the density ratio between two infinite densities is taken as 1, so a point
inside a large duplicate group scores LOF = 1. A finite-density point whose
neighbourhood contains an infinite-density point scores LOF = inf.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


def prediction_distance(u, v) -> float:
    """Fraction of positions at which two label vectors differ."""
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"prediction vectors must have equal length, got {u.shape} and {v.shape}")
    if u.size == 0:
        raise ValueError("prediction vectors are empty")
    return float(np.count_nonzero(u != v)) / u.size


def prediction_distance_matrix(P: np.ndarray) -> np.ndarray:
    """All-pairs :func:`prediction_distance` for the rows of an integer label matrix."""
    P = np.asarray(P, dtype=np.int64)
    m, n = P.shape
    if n == 0:
        raise ValueError("prediction vectors are empty")
    agree = np.zeros((m, m))
    for c in np.unique(P):
        onehot = (P == c).astype(np.float64)
        agree += onehot @ onehot.T
    # agreement counts are exact small integers in float64
    return (n - agree) / n


@dataclass(frozen=True, eq=False)
class PointSet:
    """Points with a precomputed symmetric distance matrix."""

    distances: np.ndarray
    points: Sequence | None = field(default=None)

    def __post_init__(self):
        D = np.asarray(self.distances, dtype=np.float64)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError("distance matrix must be square")
        if (D < 0).any() or not np.allclose(D, D.T, rtol=0, atol=0) or (np.diag(D) != 0).any():
            raise ValueError("distance must be nonnegative, symmetric and zero on the diagonal")
        D.setflags(write=False)
        object.__setattr__(self, "distances", D)

    @property
    def m(self) -> int:
        return len(self.distances)

    @classmethod
    def from_points(cls, points: Sequence, distance: Callable[[object, object], float]) -> "PointSet":
        m = len(points)
        D = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                D[i, j] = D[j, i] = distance(points[i], points[j])
        return cls(D, points)

    @classmethod
    def from_predictions(cls, P: np.ndarray) -> "PointSet":
        return cls(prediction_distance_matrix(P), P)


@dataclass(frozen=True)
class NeighborhoodInfo:
    k: int
    k_distance: np.ndarray
    neighbors: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class LofResult:
    raw: np.ndarray
    normalized: np.ndarray
    lrd: np.ndarray
    info: NeighborhoodInfo


def knn(ps: PointSet, k: int) -> NeighborhoodInfo:
    """Exact k-nearest neighbourhoods; every point tied at the k-distance is included."""
    m = ps.m
    if not 1 <= k <= m - 1:
        raise ValueError(f"LOF neighbourhood size must be in [1, {m - 1}], got {k}")
    D = ps.distances
    kdist = np.empty(m)
    neigh = []
    for a in range(m):
        others = np.delete(np.arange(m), a)
        d = D[a, others]
        kd = np.partition(d, k - 1)[k - 1]
        kdist[a] = kd
        neigh.append(others[d <= kd])
    return NeighborhoodInfo(k, kdist, tuple(neigh))


def reachability_distance(ps: PointSet, info: NeighborhoodInfo, a: int, b: int) -> float:
    """max(k-distance of ``b``, d(a, b)); note the k-distance is taken at ``b``."""
    if a == b:
        raise ValueError("reachability distance needs two distinct points")
    return float(max(info.k_distance[b], ps.distances[a, b]))


def local_reachability_density(ps: PointSet, info: NeighborhoodInfo, a: int) -> float:
    nb = info.neighbors[a]
    total = float(np.maximum(info.k_distance[nb], ps.distances[a, nb]).sum())
    if total == 0.0:
        return float("inf")
    return len(nb) / total


def _ratio(lrd_b: float, lrd_a: float) -> float:
    if np.isinf(lrd_a):
        return 1.0 if np.isinf(lrd_b) else 0.0
    return lrd_b / lrd_a


def lof_score(ps: PointSet, info: NeighborhoodInfo, a: int, lrd: np.ndarray | None = None) -> float:
    """Mean density ratio lrd(b) / lrd(a) over the neighbourhood of ``a``."""
    if lrd is None:
        nodes = set(info.neighbors[a].tolist()) | {a}
        lrd = {i: local_reachability_density(ps, info, i) for i in nodes}
    nb = info.neighbors[a]
    return float(np.mean([_ratio(lrd[b], lrd[a]) for b in nb]))


def normalize_scores(raw) -> np.ndarray:
    """Min-max scale onto [0, 1]; a constant input maps to 0.5 everywhere.

    Infinite scores map to 1 and the finite scores are scaled over their own
    range, so the map stays monotone when the raw scores contain ``inf``.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("cannot normalize an empty score list")
    if np.isnan(raw).any():
        raise ValueError("scores contain NaN")
    finite = np.isfinite(raw)
    out = np.ones_like(raw)
    if not finite.any():
        return np.full_like(raw, 0.5)
    lo, hi = raw[finite].min(), raw[finite].max()
    if hi == lo:
        out[finite] = 0.0 if (~finite).any() else 0.5
        return out
    out[finite] = (raw[finite] - lo) / (hi - lo)
    return out


def local_outlier_factor(ps: PointSet, k: int) -> LofResult:
    info = knn(ps, k)
    lrd = np.array([local_reachability_density(ps, info, a) for a in range(ps.m)])
    raw = np.array([lof_score(ps, info, a, lrd) for a in range(ps.m)])
    return LofResult(raw, normalize_scores(raw), lrd, info)
