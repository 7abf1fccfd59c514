"""Diversity measures and ensemble performance metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dataset import Dataset, holdout_split
from .forest import predict_matrix, vote_counts
from .lof import prediction_distance
from .seeding import BIAS_VARIANCE, derive_seed


def diversity(u, v) -> float:
    """Fraction of training instances on which two classifiers disagree."""
    return prediction_distance(u, v)


@dataclass(frozen=True)
class ContingencyCounts:
    """Joint correctness of classifiers j and k: N11 both right, N10 only j right, ..."""

    n11: int
    n10: int
    n01: int
    n00: int
    n_classes: int = 2

    @property
    def n(self) -> int:
        return self.n11 + self.n10 + self.n01 + self.n00

    def _check(self):
        if self.n_classes > 2:
            raise ValueError("pairwise correctness measures are defined for binary classification only")
        if self.n < 1:
            raise ValueError("no instances counted")


def contingency_counts(pred_j, pred_k, y_true, n_classes: int | None = None) -> ContingencyCounts:
    pred_j, pred_k, y_true = map(np.asarray, (pred_j, pred_k, y_true))
    if not pred_j.shape == pred_k.shape == y_true.shape:
        raise ValueError("prediction and label vectors must have equal length")
    if n_classes is None:
        n_classes = len(np.unique(np.concatenate([pred_j, pred_k, y_true])))
    cj, ck = pred_j == y_true, pred_k == y_true
    return ContingencyCounts(
        int(np.sum(cj & ck)), int(np.sum(cj & ~ck)), int(np.sum(~cj & ck)), int(np.sum(~cj & ~ck)),
        n_classes,
    )


def disagreement(counts: ContingencyCounts) -> float:
    counts._check()
    return (counts.n10 + counts.n01) / counts.n


def double_fault(counts: ContingencyCounts) -> float:
    counts._check()
    return counts.n00 / counts.n


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    y_true, y_pred = np.asarray(y_true, np.int64), np.asarray(y_pred, np.int64)
    return np.bincount(y_true * n_classes + y_pred, minlength=n_classes * n_classes).reshape(
        n_classes, n_classes
    )


def macro_f1(y_true, y_pred, n_classes: int) -> float:
    """Unweighted mean of per-class F1; a class with no true and no predicted rows scores 0."""
    cm = confusion_matrix(y_true, y_pred, n_classes).astype(np.float64)
    tp = np.diag(cm)
    denom = cm.sum(axis=0) + cm.sum(axis=1)  # = 2tp + fp + fn
    f1 = np.divide(2 * tp, denom, out=np.zeros(n_classes), where=denom > 0)
    return float(f1.mean())


def binary_auc(is_positive, scores) -> float:
    """Area under the ROC curve by the trapezoidal rule.

    Instances with equal scores are thresholded together, which gives a
    diagonal ROC segment across each tie group.
    """
    pos = np.asarray(is_positive, dtype=bool)
    s = np.asarray(scores, dtype=np.float64)
    P, N = int(pos.sum()), int((~pos).sum())
    if P == 0 or N == 0:
        raise ValueError("AUC needs at least one positive and one negative instance")
    order = np.argsort(-s, kind="stable")
    s, pos = s[order], pos[order]
    # last index of each tie group, walking from the highest score down
    ends = np.r_[np.flatnonzero(s[1:] != s[:-1]), len(s) - 1]
    tps = np.cumsum(pos)[ends]
    fps = np.cumsum(~pos)[ends]
    tpr = np.r_[0.0, tps / P]
    fpr = np.r_[0.0, fps / N]
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


def roc_auc_ovr(y_true, scores: np.ndarray) -> float:
    """One-vs-rest macro AUC over the classes that have both positives and negatives.

    Returns NaN when no class qualifies.
    """
    y_true = np.asarray(y_true, np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    C = scores.shape[1]
    aucs = []
    for c in range(C):
        pos = y_true == c
        if pos.all() or not pos.any():
            continue
        aucs.append(binary_auc(pos, scores[:, c]))
    return float(np.mean(aucs)) if aucs else float("nan")


@dataclass(frozen=True)
class RunMetrics:
    accuracy: float
    f_measure: float
    auc: float
    n: int


@dataclass(frozen=True)
class MetricsReport:
    avg: float
    min: float
    max: float
    sd: float
    f_measure: float
    auc: float
    runs: int
    bias: float | None = None
    variance: float | None = None


def evaluate_votes(counts: np.ndarray, y_true) -> RunMetrics:
    """Metrics from per-instance vote tallies ``(n, n_classes)``."""
    counts = np.asarray(counts)
    y_true = np.asarray(y_true, np.int64)
    if counts.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty test set")
    C = counts.shape[1]
    y_pred = np.argmax(counts, axis=1)
    fractions = counts / counts.sum(axis=1, keepdims=True)
    return RunMetrics(
        accuracy=float(np.mean(y_pred == y_true)),
        f_measure=macro_f1(y_true, y_pred, C),
        auc=roc_auc_ovr(y_true, fractions),
        n=len(y_true),
    )


def evaluate(classifier, test: Dataset) -> RunMetrics:
    """Evaluate a voting ensemble (a Forest, PrunedForest or list of trees) on ``test``."""
    if test.n == 0:
        raise ValueError("cannot evaluate on an empty test set")
    trees = classifier.trees if hasattr(classifier, "trees") else classifier
    X = classifier.prepare(test) if hasattr(classifier, "prepare") else test.X
    if len(trees) == 0:
        raise ValueError("cannot vote with an empty ensemble")
    return evaluate_votes(vote_counts(predict_matrix(trees, X), test.n_classes), test.y)


def aggregate_runs(per_run: Sequence[RunMetrics]) -> MetricsReport:
    """Average/min/max and population SD of accuracy; means of F-measure and AUC."""
    if len(per_run) == 0:
        raise ValueError("no runs to aggregate")
    acc = np.array([r.accuracy for r in per_run])
    return MetricsReport(
        avg=float(acc.mean()),
        min=float(acc.min()),
        max=float(acc.max()),
        sd=float(acc.std(ddof=0)),
        f_measure=float(np.mean([r.f_measure for r in per_run])),
        auc=float(np.mean([r.auc for r in per_run])),
        runs=len(per_run),
    )


def bias_variance_from_predictions(predictions, y_true, n_classes: int) -> tuple[float, float]:
    """0/1-loss bias and variance from a ``(runs, n)`` matrix of test predictions.

    The main prediction for an instance is its modal prediction across runs
    (earliest label wins ties). Bias is the fraction of instances whose main
    prediction is wrong; variance is the fraction of (run, instance) pairs
    that deviate from the main prediction.
    """
    predictions = np.asarray(predictions, np.int64)
    y_true = np.asarray(y_true, np.int64)
    if predictions.ndim != 2 or predictions.shape[0] < 2:
        raise ValueError("bias/variance needs predictions from at least 2 runs")
    if predictions.shape[1] != len(y_true) or len(y_true) == 0:
        raise ValueError("prediction matrix does not match the test labels")
    main = np.argmax(vote_counts(predictions, n_classes), axis=1)
    bias = float(np.mean(main != y_true))
    variance = float(np.mean(predictions != main[None, :]))
    return bias, variance


def bootstrap_resamples(d: Dataset, runs: int, seed: int, train_fraction: float = 0.66):
    """Fixed test split of ``d`` plus ``runs`` bootstrap resamples of the remaining pool.

    Yields ``(run, sample, run_seed, test)``.
    """
    split = holdout_split(d, train_fraction, derive_seed(seed, BIAS_VARIANCE))
    pool, test = split.train, split.test
    for r in range(runs):
        rng = np.random.default_rng(derive_seed(seed, BIAS_VARIANCE, r))
        sample = pool.subset(rng.integers(0, pool.n, size=pool.n))
        yield r, sample, derive_seed(seed, BIAS_VARIANCE, r, 1), test


def bias_variance(
    builder: Callable[[Dataset, int], Callable[[Dataset], np.ndarray]],
    d: Dataset,
    runs: int = 10,
    seed: int = 0,
    train_fraction: float = 0.66,
) -> tuple[float, float]:
    """Estimate 0/1-loss bias and variance of a training procedure.

    ``d`` is split once into a training pool and a fixed test set. Each run
    trains ``builder(sample, run_seed)`` on a bootstrap resample of the pool;
    the returned predictor maps a Dataset to label indices.
    """
    if runs < 2:
        raise ValueError("bias/variance needs at least 2 runs")
    preds, test = [], None
    for _, sample, run_seed, test in bootstrap_resamples(d, runs, seed, train_fraction):
        preds.append(np.asarray(builder(sample, run_seed)(test), dtype=np.int64))
    return bias_variance_from_predictions(np.stack(preds), test.y, d.n_classes)
