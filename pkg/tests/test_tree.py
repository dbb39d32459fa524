import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from prekit.data import CATEGORICAL, CONTINUOUS, Column, Dataset
from prekit.tree import (SplitCondition, TreeConfig, TreeError, TreeNode,
                         apply_tree, best_threshold, fit_tree, predict_row,
                         predict_tree, select_split_feature,
                         _correlation_pvalue)


def make_data(n=60, seed=0, categorical=False):
    rng = np.random.default_rng(seed)
    cols = [Column("x1", CONTINUOUS, rng.normal(size=n)),
            Column("x2", CONTINUOUS, rng.normal(size=n))]
    if categorical:
        codes = rng.integers(0, 3, n).astype(float)
        cols.append(Column("g", CATEGORICAL, codes, ("a", "b", "c")))
    return Dataset(cols, outcome=None)


class TestCorrelationPvalue:
    def test_matches_reference_t_transform(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = rng.integers(5, 80)
            x = rng.normal(size=n)
            y = 0.5 * x + rng.normal(size=n)
            expected = stats.pearsonr(x, y).pvalue
            assert _correlation_pvalue(x, y) == pytest.approx(expected,
                                                              rel=1e-10)

    def test_undefined_cases(self):
        y = np.array([1.0, 2.0, 3.0])
        assert _correlation_pvalue(np.array([1.0, 1.0, 1.0]), y) is None
        assert _correlation_pvalue(np.array([1.0, 2.0]), y[:2]) is None

    def test_perfect_correlation(self):
        x = np.arange(10.0)
        assert _correlation_pvalue(x, 2 * x + 1) == pytest.approx(0.0)


class TestSelectSplitFeature:
    def test_picks_strongest_feature(self):
        d = make_data(n=200, seed=2)
        y = 3.0 * d.column("x1").values + np.random.default_rng(3).normal(
            size=200) * 0.5
        picked = select_split_feature(d, y, np.arange(200), alpha=0.05)
        assert picked is not None and picked[0] == "x1"

    def test_bonferroni_adjustment(self):
        d = make_data(n=50, seed=4)
        y = 1.0 * d.column("x1").values + np.random.default_rng(5).normal(
            size=50)
        idx = np.arange(50)
        name, adj = select_split_feature(d, y, idx, alpha=0.05)
        raw = stats.pearsonr(d.column("x1").values, y).pvalue
        assert adj == pytest.approx(min(1.0, raw * 2), rel=1e-9)

    def test_no_signal_returns_none(self):
        d = make_data(n=40, seed=6)
        y = np.random.default_rng(99).normal(size=40)
        # not guaranteed for arbitrary seeds; this draw is comfortably null
        assert select_split_feature(d, y, np.arange(40), alpha=1e-6) is None

    def test_constant_response_returns_none(self):
        d = make_data(n=30)
        assert select_split_feature(d, np.ones(30), np.arange(30), 0.05) is None


def brute_force_reduction(x, y, thr):
    left = x <= thr
    sse = lambda v: float(np.sum((v - v.mean()) ** 2)) if v.size else 0.0
    return sse(y) - sse(y[left]) - sse(y[~left])


class TestBestThreshold:
    def test_matches_exhaustive_search(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            n = 40
            x = rng.normal(size=n)
            y = np.where(x > 0, 2.0, -1.0) + rng.normal(size=n) * 0.3
            d = Dataset([Column("x", CONTINUOUS, x)], outcome=None)
            cond = best_threshold(d, y, np.arange(n), "x", min_node_size=1)
            best = max((v for v in np.unique(x)[:-1]),
                       key=lambda v: brute_force_reduction(x, y, v))
            assert cond.op == "<=" and cond.threshold == pytest.approx(best)

    def test_threshold_is_observed_value(self):
        x = np.array([1.0, 2.0, 5.0, 6.0])
        y = np.array([0.0, 0.0, 10.0, 10.0])
        d = Dataset([Column("x", CONTINUOUS, x)], outcome=None)
        cond = best_threshold(d, y, np.arange(4), "x")
        assert cond.threshold == 2.0  # inclusive left branch

    def test_min_node_size_respected(self):
        x = np.arange(10.0)
        y = np.array([0.0] * 1 + [5.0] * 9)
        d = Dataset([Column("x", CONTINUOUS, x)], outcome=None)
        cond = best_threshold(d, y, np.arange(10), "x", min_node_size=3)
        left = (x <= cond.threshold).sum()
        assert 3 <= left <= 7

    def test_min_node_size_infeasible_returns_none(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        y = np.array([0.0, 1.0, 2.0, 3.0])
        d = Dataset([Column("x", CONTINUOUS, x)], outcome=None)
        assert best_threshold(d, y, np.arange(4), "x", min_node_size=3) is None

    def test_categorical_levels_grouped_by_mean(self):
        codes = np.array([0, 0, 1, 1, 2, 2], dtype=float)
        y = np.array([0.0, 0.2, 10.0, 10.2, 0.1, 0.3])
        d = Dataset([Column("g", CATEGORICAL, codes, ("lo1", "hi", "lo2"))],
                    outcome=None)
        cond = best_threshold(d, y, np.arange(6), "g")
        assert cond.op == "in"
        assert set(cond.threshold) == {"lo1", "lo2"}

    def test_constant_feature_raises(self):
        d = Dataset([Column("x", CONTINUOUS, np.ones(5))], outcome=None)
        with pytest.raises(TreeError):
            best_threshold(d, np.arange(5.0), np.arange(5), "x")


class TestFitTree:
    def test_depth_limit(self):
        d = make_data(n=400, seed=8)
        y = (d.column("x1").values > 0).astype(float) + \
            (d.column("x2").values > 0) * 2.0
        tree = fit_tree(d, y, TreeConfig(max_depth=3, min_node_size=2))

        def max_depth(node):
            if node.is_leaf:
                return node.depth
            return max(max_depth(node.left), max_depth(node.right))
        assert max_depth(tree) <= 3

    def test_constant_response_is_leaf(self):
        d = make_data(n=50, seed=9)
        tree = fit_tree(d, np.full(50, 3.25), TreeConfig())
        assert tree.is_leaf and tree.prediction == pytest.approx(3.25)

    def test_leaf_sizes_respect_minimum(self):
        d = make_data(n=300, seed=10, categorical=True)
        y = d.column("x1").values * 2 + np.random.default_rng(11).normal(size=300)
        cfg = TreeConfig(min_node_size=7)
        tree = fit_tree(d, y, cfg)

        def check(node):
            if node.is_leaf:
                assert node.n_samples >= cfg.min_node_size
            else:
                check(node.left)
                check(node.right)
        check(tree)

    def test_subsample_rows_only(self):
        d = make_data(n=100, seed=12)
        y = d.column("x1").values
        sub = np.arange(0, 100, 2)
        tree = fit_tree(d, y, TreeConfig(), subsample=sub)
        assert tree.n_samples == 50

    def test_errors(self):
        d = make_data(n=10)
        with pytest.raises(TreeError):
            fit_tree(d, np.full(10, np.nan), TreeConfig())
        with pytest.raises(TreeError):
            fit_tree(d, np.zeros(10), TreeConfig(), subsample=np.array([0]))


class TestPrediction:
    def _fitted(self):
        d = make_data(n=200, seed=13, categorical=True)
        y = (2 * d.column("x1").values - d.column("x2").values
             + np.random.default_rng(14).normal(size=200) * 0.2)
        return d, fit_tree(d, y, TreeConfig(min_node_size=5))

    def test_row_and_vector_agree(self):
        d, tree = self._fitted()
        vec = predict_tree(tree, d)
        for i in range(0, d.n_rows, 17):
            assert predict_row(tree, d.row_dict(i)) == pytest.approx(vec[i])

    def test_predictions_are_leaf_means(self):
        d, tree = self._fitted()
        leaves = apply_tree(tree, d)
        vec = predict_tree(tree, d)
        for i, leaf in enumerate(leaves):
            assert leaf.is_leaf and vec[i] == pytest.approx(leaf.prediction)

    def test_missing_feature_raises(self):
        _, tree = self._fitted()
        if not tree.is_leaf:
            with pytest.raises(TreeError):
                predict_row(tree, {})

    def test_serialization_round_trip(self):
        d, tree = self._fitted()
        clone = TreeNode.from_dict(tree.to_dict())
        np.testing.assert_allclose(predict_tree(clone, d),
                                   predict_tree(tree, d))


class TestSplitCondition:
    def test_evaluate_ops(self):
        c = Column("x", CONTINUOUS, np.array([1.0, 2.0, 3.0]))
        le = SplitCondition("x", "<=", 2.0).evaluate(c)
        gt = SplitCondition("x", ">", 2.0).evaluate(c)
        np.testing.assert_array_equal(le, [True, True, False])
        np.testing.assert_array_equal(gt, ~le)
        g = Column("g", CATEGORICAL, np.array([0.0, 1.0, 2.0]), ("a", "b", "c"))
        inn = SplitCondition("g", "in", ("a", "c")).evaluate(g)
        np.testing.assert_array_equal(inn, [True, False, True])
        np.testing.assert_array_equal(
            SplitCondition("g", "not_in", ("a", "c")).evaluate(g), ~inn)

    @given(st.floats(-5, 5), st.floats(-5, 5))
    @settings(max_examples=50)
    def test_complement_ops_partition(self, thr, v):
        c = Column("x", CONTINUOUS, np.array([v]))
        le = SplitCondition("x", "<=", thr).evaluate(c)[0]
        gt = SplitCondition("x", ">", thr).evaluate(c)[0]
        assert le != gt
