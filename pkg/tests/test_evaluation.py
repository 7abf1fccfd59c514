import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lofdrf.evaluation import (
    ContingencyCounts,
    RunMetrics,
    aggregate_runs,
    bias_variance,
    bias_variance_from_predictions,
    binary_auc,
    confusion_matrix,
    contingency_counts,
    disagreement,
    diversity,
    double_fault,
    evaluate,
    evaluate_votes,
    macro_f1,
    roc_auc_ovr,
)
from lofdrf.forest import build_forest, predict_forest

from conftest import make_dataset
from oracles import mann_whitney_auc
from test_tree import leaf_tree

# ten instances, five of each class; tallies of four trees voting for class 0
FIXTURE_Y = [0] * 5 + [1] * 5
FIXTURE_A_VOTES = [4, 3, 3, 2, 1, 3, 2, 1, 1, 0]


def fixture_counts():
    a = np.array(FIXTURE_A_VOTES)
    return np.stack([a, 4 - a], axis=1)


class TestDiversity:
    def test_worked_example(self):
        u = list("aabccabcbb")
        v = list("aabbaabccc")
        assert diversity(u, v) == 0.4

    def test_identical_and_opposite(self):
        assert diversity([0, 1, 2], [0, 1, 2]) == 0.0
        assert diversity([0, 1, 2], [1, 2, 0]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            diversity([0, 1], [0, 1, 1])

    @given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=50))
    def test_symmetric_and_complement_of_agreement(self, pairs):
        u, v = zip(*pairs)
        agree = sum(a == b for a, b in pairs) / len(pairs)
        assert diversity(u, v) == diversity(v, u)
        assert diversity(u, v) == pytest.approx(1 - agree, abs=1e-15)


class TestPairwise:
    def test_derived_counts(self):
        c = ContingencyCounts(4, 3, 2, 1)
        assert disagreement(c) == 0.5
        assert double_fault(c) == 0.1

    def test_extremes(self):
        assert disagreement(ContingencyCounts(5, 0, 0, 5)) == 0.0
        assert disagreement(ContingencyCounts(0, 4, 6, 0)) == 1.0
        assert double_fault(ContingencyCounts(3, 1, 1, 0)) == 0.0
        assert double_fault(ContingencyCounts(0, 0, 0, 7)) == 1.0

    def test_counts_from_predictions(self):
        y = [0, 0, 1, 1, 0]
        c = contingency_counts([0, 1, 1, 0, 0], [0, 0, 0, 0, 1], y)
        assert (c.n11, c.n10, c.n01, c.n00) == (1, 2, 1, 1)

    def test_multiclass_rejected(self):
        c = contingency_counts([0, 1, 2], [0, 2, 1], [0, 1, 2])
        with pytest.raises(ValueError):
            disagreement(c)
        with pytest.raises(ValueError):
            double_fault(c)

    @given(st.lists(st.tuples(*[st.integers(0, 1)] * 3), min_size=1, max_size=40))
    def test_disagreement_identities(self, triples):
        pj, pk, y = zip(*triples)
        c = contingency_counts(pj, pk, y, n_classes=2)
        assert c.n == len(triples)
        assert disagreement(c) + double_fault(c) <= 1.0
        assert disagreement(c) == pytest.approx(1 - (c.n11 + c.n00) / c.n, abs=1e-15)


class TestMetrics:
    def test_fixture_accuracy_f1_auc(self):
        m = evaluate_votes(fixture_counts(), FIXTURE_Y)
        assert m.accuracy == pytest.approx(0.7, abs=1e-9)
        assert m.f_measure == pytest.approx((8 / 11 + 2 / 3) / 2, abs=1e-9)
        assert m.auc == pytest.approx(0.78, abs=1e-9)

    def test_fixture_auc_matches_pairwise_oracle(self):
        scores = np.array(FIXTURE_A_VOTES) / 4
        pos = [s for s, y in zip(scores, FIXTURE_Y) if y == 0]
        neg = [s for s, y in zip(scores, FIXTURE_Y) if y == 1]
        assert mann_whitney_auc(pos, neg) == pytest.approx(0.78, abs=1e-12)

    def test_confusion_matrix(self):
        pred = np.argmax(fixture_counts(), axis=1)
        np.testing.assert_array_equal(confusion_matrix(FIXTURE_Y, pred, 2), [[4, 1], [2, 3]])

    def test_perfect_classifier(self):
        counts = np.array([[3, 0], [0, 3], [2, 1], [1, 2]])
        m = evaluate_votes(counts, [0, 1, 0, 1])
        assert (m.accuracy, m.f_measure, m.auc) == (1.0, 1.0, 1.0)

    def test_constant_classifier_on_balanced_data(self):
        m = evaluate_votes(np.array([[5, 0]] * 6), [0, 1] * 3)
        assert m.accuracy == 0.5
        assert m.auc == pytest.approx(0.5, abs=1e-9)

    def test_absent_class_scores_zero_f1(self):
        assert macro_f1([0, 1, 0], [0, 1, 0], 3) == pytest.approx(2 / 3)

    def test_ovr_skips_single_sided_class(self):
        scores = np.array([[0.9, 0.1, 0.0], [0.2, 0.8, 0.0], [0.6, 0.4, 0.0]])
        assert roc_auc_ovr([0, 1, 0], scores) == 1.0
        assert math.isnan(roc_auc_ovr([0, 0], np.array([[1.0, 0.0], [0.5, 0.5]])))

    def test_binary_auc_needs_both_classes(self):
        with pytest.raises(ValueError):
            binary_auc([True, True], [0.1, 0.2])

    @settings(max_examples=100)
    @given(st.lists(st.tuples(st.booleans(), st.integers(0, 5)), min_size=2, max_size=40))
    def test_auc_matches_pairwise_oracle(self, rows):
        pos = [s for p, s in rows if p]
        neg = [s for p, s in rows if not p]
        if not pos or not neg:
            return
        flags, scores = zip(*rows)
        assert binary_auc(flags, scores) == pytest.approx(mann_whitney_auc(pos, neg), abs=1e-12)

    def test_empty_test_set(self):
        with pytest.raises(ValueError):
            evaluate_votes(np.empty((0, 2)), [])

    def test_evaluate_ensemble(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(80, 3))
        y = (X[:, 0] > 0).astype(int)
        d = make_dataset(X, y)
        f = build_forest(d.subset(range(50)), N=9, master_seed=2)
        test = d.subset(range(50, 80))
        m = evaluate(f, test)
        pred = predict_forest(f.trees, test.X, 2)
        cm = confusion_matrix(test.y, pred, 2)
        assert m.accuracy == np.trace(cm) / cm.sum() == np.mean(pred == test.y)
        assert m.n == 30

    def test_evaluate_tree_list(self):
        d = make_dataset([[0.0], [1.0]], [0, 1])
        assert evaluate([leaf_tree(0)], d).accuracy == 0.5
        with pytest.raises(ValueError):
            evaluate([], d)


class TestAggregate:
    def test_two_runs(self):
        r = aggregate_runs([RunMetrics(0.6, 0.5, 0.7, 10), RunMetrics(0.8, 0.7, 0.9, 10)])
        assert r.avg == pytest.approx(0.7)
        assert (r.min, r.max) == (0.6, 0.8)
        assert r.sd == pytest.approx(0.1)
        assert r.f_measure == pytest.approx(0.6) and r.auc == pytest.approx(0.8)

    def test_single_run(self):
        assert aggregate_runs([RunMetrics(0.9, 0.9, 0.9, 5)]).sd == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_runs([])

    def test_ten_runs_against_naive_recomputation(self):
        accs = [0.71, 0.74, 0.69, 0.77, 0.72, 0.70, 0.75, 0.73, 0.68, 0.76]
        runs = [RunMetrics(a, a - 0.05, a + 0.05, 100) for a in accs]
        r = aggregate_runs(runs)
        mean = sum(accs) / len(accs)
        sd = math.sqrt(sum((a - mean) ** 2 for a in accs) / len(accs))
        assert r.avg == pytest.approx(mean, abs=1e-12)
        assert r.sd == pytest.approx(sd, abs=1e-12)
        assert (r.min, r.max) == (min(accs), max(accs))
        assert r.min <= r.avg <= r.max


class TestBiasVariance:
    def test_toy_trace(self):
        bias, var = bias_variance_from_predictions([[0], [0], [1]], [0], 2)
        assert bias == 0.0
        assert var == pytest.approx(1 / 3, abs=1e-15)

    def test_always_correct(self):
        assert bias_variance_from_predictions([[0, 1], [0, 1]], [0, 1], 2) == (0.0, 0.0)

    def test_constant_classifier(self):
        d = make_dataset(np.arange(30.0), np.arange(30) % 2)
        bias, var = bias_variance(lambda s, seed: lambda t: np.zeros(t.n, int), d, runs=4, seed=1)
        assert var == 0.0
        assert 0.0 <= bias <= 1.0

    def test_runs_must_be_at_least_two(self):
        d = make_dataset(np.arange(10.0), np.arange(10) % 2)
        with pytest.raises(ValueError):
            bias_variance(lambda s, seed: lambda t: np.zeros(t.n, int), d, runs=1)

    @settings(max_examples=50)
    @given(st.integers(0, 10_000))
    def test_bounds(self, seed):
        rng = np.random.default_rng(seed)
        preds = rng.integers(0, 3, size=(int(rng.integers(2, 6)), 12))
        y = rng.integers(0, 3, size=12)
        b, v = bias_variance_from_predictions(preds, y, 3)
        assert 0.0 <= b <= 1.0 and 0.0 <= v <= 1.0
