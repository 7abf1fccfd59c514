"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` (the lines print even without ``-s``).
"""

import math
import time

import numpy as np
import pytest

import lofdrf.forest as forest_mod
from lofdrf.cli import main
from lofdrf.evaluation import bias_variance, bias_variance_from_predictions, diversity, evaluate_votes
from lofdrf.experiment import ExperimentConfig, run_experiment
from lofdrf.forest import build_forest, majority_vote
from lofdrf.lof import PointSet, local_outlier_factor
from lofdrf.prune import classify_pruned, pruning_level, select_top_k, weight_trees

from conftest import make_dataset, random_toy
from oracles import brute_force_lof, naive_mode
from test_evaluation import FIXTURE_A_VOTES, FIXTURE_Y, fixture_counts
from test_tree import leaf_tree


@pytest.fixture
def verdict(capsys):
    def _report(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else ""))
        assert ok, f"criterion {number} failed: {detail}"

    return _report


def test_c1_lof_matches_brute_force(verdict):
    rng = np.random.default_rng(20241)
    worst, t0 = 0.0, time.perf_counter()
    ok = True
    for _ in range(200):
        m = int(rng.integers(3, 51))
        n = int(rng.integers(1, 30))
        k = int(rng.integers(1, min(10, m - 1) + 1))
        P = rng.integers(0, int(rng.integers(2, 5)), size=(m, n))
        got = local_outlier_factor(PointSet.from_predictions(P), k).raw
        want = brute_force_lof(P.tolist(), k)
        for g, w in zip(got, want):
            if math.isinf(w) or math.isinf(g):
                ok &= math.isinf(w) and math.isinf(g)
            else:
                rel = abs(g - w) / abs(w) if w else abs(g)
                worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    ok &= worst <= 1e-9 and elapsed < 10
    verdict(1, "LOF equals brute-force oracle on 200 random sets",
            ok, f"max rel err {worst:.2e}, {elapsed:.2f}s")


def test_c2_diversity_worked_example(verdict):
    d = diversity(list("aabccabcbb"), list("aabbaabccc"))
    verdict(2, "diversity of the worked vectors is exactly 0.4", d == 0.4, f"got {d!r}")


def test_c3_pruning_level_table(verdict):
    levels = [pruning_level(500, k) for k in range(5, 41, 5)]
    want = [99.0, 98.0, 97.0, 96.0, 95.0, 94.0, 93.0, 92.0]
    verdict(3, "pruning levels for k=5..40 at N=500", levels == want, f"got {levels}")


def test_c4_selection_invariants(verdict):
    rng = np.random.default_rng(404)
    failures = []
    for trial in range(100):
        d = random_toy(rng, n_classes=int(rng.integers(2, 4)))
        N = int(rng.integers(3, 51))
        f = build_forest(d, N=N, S=int(rng.integers(1, 4)), master_seed=trial)
        ws = weight_trees(f, d, k_lof=int(rng.integers(1, min(10, N - 1) + 1)))
        if any(w.weight != w.normalized_lof * w.accuracy for w in ws):
            failures.append((trial, "weight product"))
        full = select_top_k(ws, N).selected
        for k in range(1, N + 1):
            p = select_top_k(ws, k)
            chosen = set(p.selected)
            rejected = [w.weight for w in ws if w.tree_index not in chosen]
            if rejected and min(w.weight for w in p.weights) < max(rejected):
                failures.append((trial, f"dominance k={k}"))
            if p.selected != full[:k]:
                failures.append((trial, f"prefix k={k}"))
    verdict(4, "selection dominance, exact weight product, prefix nesting on 100 forests",
            not failures, f"{len(failures)} violations" + (f", first {failures[0]}" if failures else ""))


def test_c5_vote_and_traversal(verdict, monkeypatch):
    rng = np.random.default_rng(5)
    d = random_toy(rng, n=40, n_classes=3)
    f = build_forest(d, N=50, S=2, master_seed=5)
    ws = weight_trees(f, d, k_lof=10)
    calls = []
    real = forest_mod.predict_tree
    monkeypatch.setattr(forest_mod, "predict_tree", lambda t, x: calls.append(t) or real(t, x))
    counts_ok = True
    for k in (1, 5, 17, 50):
        p = select_top_k(ws, k, f)
        calls.clear()
        classify_pruned(p, d.X[0])
        counts_ok &= len(calls) == k and {id(t) for t in calls} == {id(f.trees[i]) for i in p.selected}
    monkeypatch.undo()

    mismatches = 0
    for _ in range(1000):
        C = int(rng.integers(2, 6))
        votes = rng.integers(0, C, size=int(rng.integers(1, 40))).tolist()
        trees = [leaf_tree(v, C) for v in votes]
        mismatches += majority_vote(trees, [0.0]) != naive_mode(votes, range(C))
    verdict(5, "classify_pruned traverses exactly k trees; vote equals naive tally on 1000 profiles",
            counts_ok and mismatches == 0, f"traversal ok={counts_ok}, vote mismatches={mismatches}")


@pytest.mark.slow
def test_c6_desk_scale_trend(verdict):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(data=("bundled:diabetes", "bundled:breast-cancer"), bias_variance=False)
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    lines, ok = [], elapsed < 600
    for ds in report.datasets:
        best = ds.best_row()
        gap = 100 * (best.metrics.avg - ds.rf.avg)
        ok &= gap >= -2.0
        lines.append(f"{ds.name}: RF {100 * ds.rf.avg:.2f}%, best k={best.k} {100 * best.metrics.avg:.2f}% "
                     f"(gap {gap:+.2f} pp)")
    verdict(6, "best pruned child within 2 pp of RF on two bundled datasets, N=500, 10 runs",
            ok, "; ".join(lines) + f"; {elapsed:.0f}s")


def test_c7_bias_variance_sanity(verdict):
    bias0, var0 = bias_variance_from_predictions([[0], [0], [1]], [0], 2)
    toy_ok = bias0 == 0.0 and var0 == 1 / 3

    d = make_dataset(np.arange(40.0), np.arange(40) % 2)
    _, const_var = bias_variance(lambda s, seed: lambda t: np.ones(t.n, dtype=int), d, runs=5, seed=3)

    rng = np.random.default_rng(7)
    in_range = True
    for _ in range(300):
        runs, n, C = int(rng.integers(2, 8)), int(rng.integers(1, 30)), int(rng.integers(2, 5))
        b, v = bias_variance_from_predictions(rng.integers(0, C, (runs, n)), rng.integers(0, C, n), C)
        in_range &= 0 <= b <= 1 and 0 <= v <= 1
    rf_b, rf_v = bias_variance(
        lambda s, seed: (lambda fo: lambda t: forest_mod.predict_forest(fo.trees, fo.prepare(t), 2))(
            build_forest(s, N=15, master_seed=seed)),
        make_dataset(rng.normal(size=(60, 2)), rng.integers(0, 2, 60)), runs=4, seed=1)
    in_range &= 0 <= rf_b <= 1 and 0 <= rf_v <= 1
    verdict(7, "bias/variance: toy trace exact, constant classifier variance 0, values in [0,1]",
            toy_ok and const_var == 0.0 and in_range,
            f"toy=({bias0}, {var0:.6f}), constant variance={const_var}, in range={in_range}")


def test_c8_experiment_is_byte_deterministic(verdict, tmp_path, capsys):
    args = ["experiment", "--data", "bundled:breast-cancer", "--data", "bundled:diabetes",
            "--trees", "60", "--runs", "3", "--seed", "11"]
    codes = [main(args + ["--out", str(tmp_path / name)]) for name in ("a", "b")]
    capsys.readouterr()
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = names == sorted(p.name for p in (tmp_path / "b").iterdir()) and all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names
    )
    verdict(8, "two identical experiment invocations write byte-identical reports",
            codes == [0, 0] and same and len(names) == 4, f"exit codes {codes}, files {names}")


def test_c9_metric_fixture(verdict):
    m = evaluate_votes(fixture_counts(), FIXTURE_Y)
    f1_want = (8 / 11 + 2 / 3) / 2
    auc_want = 19.5 / 25
    fixture_ok = abs(m.f_measure - f1_want) <= 1e-9 and abs(m.auc - auc_want) <= 1e-9

    perfect = evaluate_votes(np.array([[4, 0], [3, 1], [1, 3], [0, 4]]), [0, 0, 1, 1]).auc
    constant = evaluate_votes(np.array([[2, 2]] * 6), [0, 1, 1, 0, 1, 0]).auc
    ok = fixture_ok and abs(perfect - 1.0) <= 1e-9 and abs(constant - 0.5) <= 1e-9
    verdict(9, "macro-F1 and OvR AUC on the 10-instance fixture; perfect AUC 1, constant AUC 0.5", ok,
            f"F1 {m.f_measure:.12f} vs {f1_want:.12f}, AUC {m.auc:.12f} vs {auc_want}, "
            f"perfect {perfect}, constant {constant}; votes {FIXTURE_A_VOTES}")

