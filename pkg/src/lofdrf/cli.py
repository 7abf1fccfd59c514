"""Command-line front end: ``lofdrf train|prune|evaluate|experiment|split|convert``.

Exit codes: 0 success, 2 input or validation error, 3 runtime error.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
import time
from pathlib import Path

import click

from .dataset import DatasetError, arff_to_csv, holdout_split, load_csv, read_schema_overrides
from .evaluation import evaluate
from .experiment import ConfigError, make_config, read_config_file, resolve_dataset, run_experiment
from .forest import Forest, ModelFileError, build_forest, predict_forest
from .prune import PrunedForest, pruning_level, select_top_k, weight_trees
from .report import emit_report

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3


class InputError(click.ClickException):
    exit_code = EXIT_INPUT


def _label(value: str):
    try:
        return int(value)
    except ValueError:
        return value


def _load_model(path: str):
    """Forest or PrunedForest, decided by the file's format tag."""
    p = Path(path)
    if not p.is_file():
        raise InputError(f"model file not found: {p}")
    try:
        fmt = json.loads(p.read_text(encoding="utf-8")).get("format")
    except (json.JSONDecodeError, AttributeError):
        raise InputError(f"{p} is not a model file")
    return PrunedForest.load(p) if fmt == "lofdrf-pruned" else Forest.load(p)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool):
    """Random forests pruned by Local Outlier Factor tree selection."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")


@cli.command()
@click.option("--data", required=True, help="Training CSV (header row required).")
@click.option("--label", default="-1", show_default=True, help="Label column name or index.")
@click.option("--trees", type=int, default=500, show_default=True, help="Parent forest size N.")
@click.option("--features", type=int, default=None, help="Features drawn per node (default floor(sqrt(p))).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--schema", type=click.Path(), default=None, help="name:kind override file.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), default="forest.json", show_default=True)
def train(data, label, trees, features, seed, schema, jobs, out):
    """Build a parent Random Forest and write it to --out."""
    overrides = read_schema_overrides(schema) if schema else None
    d = load_csv(data, _label(label), kind_overrides=overrides)
    t0 = time.perf_counter()
    forest = build_forest(d, trees, features, seed, jobs)
    elapsed = time.perf_counter() - t0
    forest.save(out)
    click.echo(f"trees={forest.n_trees} features_per_node={forest.feature_subset_size} "
               f"rows={d.n} build_seconds={elapsed:.2f} -> {out}")


@cli.command()
@click.option("--model", required=True, help="Parent forest file.")
@click.option("--data", required=True, help="The forest's training CSV.")
@click.option("--label", default="-1", show_default=True)
@click.option("--k", "k", type=int, required=True, help="Number of trees to keep.")
@click.option("--k-lof", type=int, default=10, show_default=True, help="LOF neighbourhood size.")
@click.option("--invert-ranking", is_flag=True, help="NON-PAPER: keep the lowest-weight trees.")
@click.option("--out", type=click.Path(), default="pruned.json", show_default=True)
def prune(model, data, label, k, k_lof, invert_ranking, out):
    """Select the top-k LOF-weighted trees of a parent forest."""
    forest = Forest.load(model)
    d = load_csv(data, _label(label), schema=forest.schema)
    weights = weight_trees(forest, d, k_lof)
    pruned = select_top_k(weights, k, forest, invert=invert_ranking)
    pruned.save(out, model)
    if invert_ranking:
        click.echo("NON-PAPER: inverted ranking, lowest-weight trees selected")
    click.echo("tree_index\traw_lof\tnormalized_lof\taccuracy\tweight")
    for w in pruned.weights:
        click.echo(f"{w.tree_index}\t{w.raw_lof:.6g}\t{w.normalized_lof:.6f}\t{w.accuracy:.6f}\t{w.weight:.6f}")
    click.echo(f"selected={list(pruned.selected)}")
    click.echo(f"pruning_level={pruning_level(forest.n_trees, k):.2f}% -> {out}")


@cli.command("evaluate")
@click.option("--model", required=True, help="Forest or pruned-forest file.")
@click.option("--data", required=True, help="Test CSV.")
@click.option("--label", default="-1", show_default=True)
@click.option("--dump", type=click.Path(), default=None, help="Write per-instance predictions to this CSV.")
@click.option("--report", type=click.Path(), default=None, help="Write metrics as JSON to this file.")
def evaluate_cmd(model, data, label, dump, report):
    """Accuracy, macro F-measure and AUC of a model on labelled data."""
    clf = _load_model(model)
    schema = clf.parent.schema if isinstance(clf, PrunedForest) else clf.schema
    d = load_csv(data, _label(label), schema=schema)
    m = evaluate(clf, d)
    kind = f"LOFB-DRF(k={clf.k})" if isinstance(clf, PrunedForest) else f"RF(N={clf.n_trees})"
    click.echo(f"model={kind} n={m.n} accuracy={m.accuracy!r} f_measure={m.f_measure!r} auc={m.auc!r}")
    if report:
        Path(report).write_text(json.dumps({"model": kind, "n": m.n, "accuracy": m.accuracy,
                                            "f_measure": m.f_measure, "auc": m.auc}, indent=2) + "\n")
    if dump:
        pred = predict_forest(clf.trees, clf.prepare(d), d.n_classes)
        with open(dump, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "true", "predicted"])
            for j, (t, p) in enumerate(zip(d.y, pred)):
                w.writerow([j, d.class_labels[t], d.class_labels[p]])


@cli.command()
@click.option("--config", "config_file", type=click.Path(), default=None, help="Flat key=value config file.")
@click.option("--data", multiple=True, help="CSV path or bundled:<name>; repeatable.")
@click.option("--label", default=None, help="Label column name or index (default: last column).")
@click.option("--trees", type=int, default=None, help="Parent forest size [500].")
@click.option("--features", type=int, default=None, help="Features drawn per node.")
@click.option("--k-lof", type=int, default=None, help="LOF neighbourhood size [10].")
@click.option("--k", "k", default=None, help="Comma-separated sweep of child sizes [5,10,...,40].")
@click.option("--runs", type=int, default=None, help="Repetitions [10].")
@click.option("--train-fraction", type=float, default=None, help="Holdout training share [0.66].")
@click.option("--seed", type=int, default=None, help="Master seed [0].")
@click.option("--out", type=click.Path(), default=None, help="Output directory [report].")
@click.option("--format", "fmt", type=click.Choice(["csv", "markdown", "both"]), default=None)
@click.option("--fixed-split/--resample-split", default=None, help="Reuse one holdout split for all runs.")
@click.option("--invert-ranking/--top-ranking", default=None, help="NON-PAPER: select lowest weights.")
@click.option("--bias-variance/--no-bias-variance", default=None, help="Also estimate bias/variance [on].")
@click.option("--schema", type=click.Path(), default=None, help="name:kind override file.")
@click.option("--jobs", type=int, default=None)
def experiment(config_file, data, label, trees, features, k_lof, k, runs, train_fraction, seed,
               out, fmt, fixed_split, invert_ranking, bias_variance, schema, jobs):
    """Repeated holdout comparison of the parent RF with LOFB-DRF children."""
    file_values = read_config_file(config_file) if config_file else {}
    flags = dict(
        data=tuple(data) or None, label=label, trees=trees, features=features, k_lof=k_lof,
        k=tuple(int(v) for v in k.split(",") if v.strip()) if k is not None else None,
        runs=runs, train_fraction=train_fraction, seed=seed, out=out, format=fmt,
        fixed_split=fixed_split, invert_ranking=invert_ranking, bias_variance=bias_variance,
        schema=schema, jobs=jobs,
    )
    cfg = make_config(file_values, flags)
    t0 = time.perf_counter()
    report = run_experiment(cfg)
    paths = emit_report(report, cfg.out, cfg.format)
    if cfg.invert_ranking:
        click.echo("NON-PAPER: inverted ranking, lowest-weight trees selected")
    for ds in report.datasets:
        best = ds.best_row()
        click.echo(f"{ds.name}: RF avg={100 * ds.rf.avg:.2f}% best LOFB-DRF k={best.k} "
                   f"avg={100 * best.metrics.avg:.2f}% pruning={best.pruning_level:.2f}%")
    click.echo(f"elapsed={time.perf_counter() - t0:.1f}s wrote {', '.join(str(p) for p in paths)}")


@cli.command()
@click.option("--data", required=True)
@click.option("--label", default="-1", show_default=True)
@click.option("--train-fraction", type=float, default=0.66, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
def split(data, label, train_fraction, seed, out_dir):
    """Write train.csv and test.csv holdout files (raw rows, header kept)."""
    d = resolve_dataset(data, _label(label))
    sp = holdout_split(d, train_fraction, seed)
    src = Path(data) if not data.startswith("bundled:") else None
    if src is None:
        from .dataset import bundled_path
        src = bundled_path(data.split(":", 1)[1])
    with src.open(newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], [r for r in rows[1:] if r and any(c.strip() for c in r)]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, idx in (("train.csv", sp.train_indices), ("test.csv", sp.test_indices)):
        with (out / name).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(body[i] for i in idx)
    click.echo(f"train={len(sp.train_indices)} test={len(sp.test_indices)} -> {out}")


@cli.command()
@click.argument("src", type=click.Path())
@click.argument("dst", type=click.Path())
def convert(src, dst):
    """Flatten an ARFF file into CSV."""
    arff_to_csv(src, dst)
    click.echo(f"wrote {dst}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="lofdrf", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT if exc.exit_code in (1, 2) else exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_RUNTIME
    except (DatasetError, ModelFileError, ConfigError, FileNotFoundError, ValueError) as exc:
        click.echo(f"input error: {exc}", err=True)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        click.echo(f"runtime error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_RUNTIME
    return EXIT_OK


def run() -> None:
    sys.exit(main())
