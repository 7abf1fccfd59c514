"""Repeated-holdout experiment comparing a parent forest with its LOF-pruned children."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .dataset import Dataset, bundled_path, holdout_split, load_csv, read_schema_overrides
from .evaluation import (
    MetricsReport,
    aggregate_runs,
    bias_variance_from_predictions,
    bootstrap_resamples,
    evaluate_votes,
)
from .forest import build_forest, predict_matrix, vote_counts
from .prune import pruning_level, rank_trees, weight_trees
from .seeding import RUN, SPLIT, derive_seed

log = logging.getLogger(__name__)

DEFAULT_SWEEP = (5, 10, 15, 20, 25, 30, 35, 40)
REPORT_FORMATS = ("csv", "markdown", "both")
# averages of equal correct counts can differ in the last ulp
BEAT_MARGIN = 1e-9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    data: tuple[str, ...] = ()
    label: str = "-1"
    trees: int = 500
    features: int | None = None
    k_lof: int = 10
    k: tuple[int, ...] = DEFAULT_SWEEP
    runs: int = 10
    train_fraction: float = 0.66
    seed: int = 0
    out: str = "report"
    format: str = "both"
    fixed_split: bool = False
    invert_ranking: bool = False
    bias_variance: bool = True
    schema: str | None = None
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if not self.data:
            raise ConfigError("no dataset given")
        if not self.k:
            raise ConfigError("empty k sweep")
        if self.trees < 1:
            raise ConfigError("trees must be >= 1")
        bad = [k for k in self.k if not 1 <= k <= self.trees]
        if bad:
            raise ConfigError(f"k values {bad} outside [1, {self.trees}]")
        if len(set(self.k)) != len(self.k):
            raise ConfigError("duplicate k values in sweep")
        if not 1 <= self.k_lof <= self.trees - 1:
            raise ConfigError(f"k-lof must be in [1, {self.trees - 1}]")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train-fraction must lie in (0, 1)")
        if self.format not in REPORT_FORMATS:
            raise ConfigError(f"format must be one of {REPORT_FORMATS}")
        if self.features is not None and self.features < 1:
            raise ConfigError("features must be >= 1")
        return self


_INT_KEYS = {"trees", "features", "k_lof", "runs", "seed", "jobs"}
_BOOL_KEYS = {"fixed_split", "invert_ranking", "bias_variance"}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key == "train_fraction":
            return float(raw)
        if key == "k":
            return tuple(int(v) for v in raw.replace(" ", "").split(",") if v)
        if key == "data":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    if key in _BOOL_KEYS:
        low = raw.strip().lower()
        if low not in _TRUE | _FALSE:
            raise ConfigError(f"bad boolean for {key}: {raw!r}")
        return low in _TRUE
    return raw


def read_config_file(path: str | Path) -> dict:
    """Parse a flat ``key = value`` file. Keys use flag spelling (``k-lof``) or underscores."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        if not sep or key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown or malformed entry {line!r}")
        out[key] = _coerce(key, value.strip())
    return out


def make_config(file_values: Mapping | None = None, flag_values: Mapping | None = None) -> ExperimentConfig:
    """Defaults, overridden by config-file values, overridden by flags that were given."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    return ExperimentConfig(**merged).validate()


@dataclass(frozen=True)
class KRow:
    k: int
    metrics: MetricsReport
    pruning_level: float
    beats_rf: bool


@dataclass(frozen=True)
class BiasVarianceRow:
    model: str
    size: int
    pruning_level: float
    bias: float
    variance: float


@dataclass(frozen=True)
class DatasetResult:
    name: str
    n: int
    parent_size: int
    rf: MetricsReport
    rows: tuple[KRow, ...]
    bias_variance: tuple[BiasVarianceRow, ...] = ()

    def best_row(self) -> KRow:
        """Highest average accuracy; the smaller child wins ties."""
        return max(self.rows, key=lambda r: (r.metrics.avg, -r.k))

    def max_outperforming_pruning_level(self) -> float | None:
        levels = [r.pruning_level for r in self.rows if r.beats_rf]
        return max(levels) if levels else None


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    datasets: tuple[DatasetResult, ...] = field(default=())


def resolve_dataset(spec: str, label: str, schema_path: str | None = None) -> Dataset:
    """Load ``spec``: a CSV path or ``bundled:<name>`` for a shipped dataset."""
    overrides = read_schema_overrides(schema_path) if schema_path else None
    if spec.startswith("bundled:"):
        path = bundled_path(spec.split(":", 1)[1])
        shipped = path.with_suffix(".schema")
        if overrides is None and shipped.is_file():
            overrides = read_schema_overrides(shipped)
        return load_csv(path, label, kind_overrides=overrides, name=path.stem)
    return load_csv(spec, label, kind_overrides=overrides)


def _label_arg(label: str):
    try:
        return int(label)
    except ValueError:
        return label


def run_dataset(d: Dataset, cfg: ExperimentConfig) -> DatasetResult:
    C = d.n_classes
    sweep = tuple(cfg.k)
    rf_runs, k_runs = [], {k: [] for k in sweep}
    for r in range(cfg.runs):
        t0 = time.perf_counter()
        run_seed = derive_seed(cfg.seed, RUN, r)
        split_seed = derive_seed(cfg.seed, SPLIT) if cfg.fixed_split else derive_seed(cfg.seed, SPLIT, r)
        split = holdout_split(d, cfg.train_fraction, split_seed)
        forest = build_forest(split.train, cfg.trees, cfg.features, run_seed, cfg.jobs)
        ranking = rank_trees(weight_trees(forest, split.train, cfg.k_lof), cfg.invert_ranking)
        order = np.array([w.tree_index for w in ranking])
        P = predict_matrix(forest.trees, forest.prepare(split.test))
        rf_runs.append(evaluate_votes(vote_counts(P, C), split.test.y))
        for k in sweep:
            k_runs[k].append(evaluate_votes(vote_counts(P[order[:k]], C), split.test.y))
        log.info("%s run %d/%d done in %.1fs", d.name, r + 1, cfg.runs, time.perf_counter() - t0)

    rf = aggregate_runs(rf_runs)
    rows = []
    for k in sweep:
        m = aggregate_runs(k_runs[k])
        rows.append(KRow(k, m, pruning_level(cfg.trees, k), m.avg - rf.avg > BEAT_MARGIN))

    bv_rows = ()
    if cfg.bias_variance and cfg.runs >= 2:
        bv_rows = _bias_variance_rows(d, cfg)
        by_size = {row.size: row for row in bv_rows if row.model != "RF"}
        rf_bv = bv_rows[-1]
        rf = replace(rf, bias=rf_bv.bias, variance=rf_bv.variance)
        rows = [
            replace(r, metrics=replace(r.metrics, bias=by_size[r.k].bias, variance=by_size[r.k].variance))
            for r in rows
        ]
    return DatasetResult(d.name, d.n, cfg.trees, rf, tuple(rows), bv_rows)


def _bias_variance_rows(d: Dataset, cfg: ExperimentConfig) -> tuple[BiasVarianceRow, ...]:
    C = d.n_classes
    sweep = tuple(cfg.k)
    preds = {k: [] for k in sweep}
    rf_preds = []
    test = None
    for r, sample, run_seed, test in bootstrap_resamples(d, cfg.runs, cfg.seed, cfg.train_fraction):
        forest = build_forest(sample, cfg.trees, cfg.features, run_seed, cfg.jobs)
        ranking = rank_trees(weight_trees(forest, sample, cfg.k_lof), cfg.invert_ranking)
        order = np.array([w.tree_index for w in ranking])
        P = predict_matrix(forest.trees, forest.prepare(test))
        rf_preds.append(np.argmax(vote_counts(P, C), axis=1))
        for k in sweep:
            preds[k].append(np.argmax(vote_counts(P[order[:k]], C), axis=1))
        log.info("%s bias/variance resample %d/%d done", d.name, r + 1, cfg.runs)
    out = []
    for k in sweep:
        b, v = bias_variance_from_predictions(np.stack(preds[k]), test.y, C)
        out.append(BiasVarianceRow("LOFB-DRF", k, pruning_level(cfg.trees, k), b, v))
    b, v = bias_variance_from_predictions(np.stack(rf_preds), test.y, C)
    out.append(BiasVarianceRow("RF", cfg.trees, 0.0, b, v))
    return tuple(out)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    cfg = cfg.validate()
    label = _label_arg(cfg.label)
    results = []
    for spec in cfg.data:
        d = resolve_dataset(spec, label, cfg.schema)
        if cfg.features is not None and cfg.features > d.n_features:
            raise ConfigError(f"features={cfg.features} exceeds the {d.n_features} features of {d.name}")
        results.append(run_dataset(d, cfg))
    return ExperimentReport(cfg, tuple(results))
