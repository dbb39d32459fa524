import numpy as np
import pytest

from prekit.boosting import BoostConfig, BoostModel, fit_boost
from prekit.data import CATEGORICAL, CONTINUOUS, Column, Dataset
from prekit.rules import (LINEAR_TARGET_SD, Rule, Term, build_term_matrix,
                          dedup_and_decollinearize, extract_rules, _negate)
from prekit.tree import SplitCondition, TreeNode


def toy_data(n=100, seed=0):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    y = np.where(x1 > 0, 4.0, -4.0) + x2 + rng.normal(size=n) * 0.3
    return Dataset([Column("x1", CONTINUOUS, x1),
                    Column("x2", CONTINUOUS, x2),
                    Column("y", CONTINUOUS, y)], outcome="y",
                   task="regression")


def hand_tree():
    #        root: x1 <= 0
    #       /            \
    #   x2 <= 1           leaf
    #   /      \
    # leaf    leaf
    inner = TreeNode(0.0, 1, 50, SplitCondition("x2", "<=", 1.0),
                     TreeNode(-1.0, 2, 30), TreeNode(1.0, 2, 20))
    return TreeNode(0.0, 0, 100, SplitCondition("x1", "<=", 0.0),
                    inner, TreeNode(2.0, 1, 50))


def hand_model():
    return BoostModel(0.0, [hand_tree()], 0.01, "regression")


class TestExtractRules:
    def test_two_rules_per_internal_node(self):
        rules = extract_rules(hand_model())
        # 2 internal nodes -> 4 non-root nodes -> 4 rules
        assert len(rules) == 4
        texts = {str(r) for r in rules}
        assert texts == {
            "x1 <= 0",
            "x1 > 0",
            "x1 <= 0 & x2 <= 1",
            "x1 <= 0 & x2 > 1",
        }

    def test_invariant_on_fitted_ensemble(self):
        d = toy_data()
        model = fit_boost(d, BoostConfig(n_trees=20, seed=1))
        rules = extract_rules(model)

        def count_internal(node):
            return 0 if node.is_leaf else (1 + count_internal(node.left)
                                           + count_internal(node.right))
        internal = sum(count_internal(t) for t in model.trees)
        assert len(rules) == 2 * internal

    def test_sources_are_ordered_and_unique(self):
        d = toy_data()
        model = fit_boost(d, BoostConfig(n_trees=10, seed=2))
        rules = extract_rules(model)
        assert len({r.source for r in rules}) == len(rules)
        assert [r.source for r in rules] == sorted(r.source for r in rules)


class TestNegate:
    def test_round_trip(self):
        for cond in (SplitCondition("x", "<=", 1.0),
                     SplitCondition("g", "in", ("a",))):
            assert _negate(_negate(cond)) == cond

    def test_negation_complements(self):
        d = toy_data()
        cond = SplitCondition("x1", "<=", 0.0)
        a = cond.evaluate(d.column("x1"))
        b = _negate(cond).evaluate(d.column("x1"))
        np.testing.assert_array_equal(a, ~b)


class TestDedup:
    def test_drops_duplicates_and_complements(self):
        d = toy_data()
        r1 = Rule((SplitCondition("x1", "<=", 0.0),), (0, 1))
        r1_dup = Rule((SplitCondition("x1", "<=", 0.0),), (1, 1))
        r1_comp = Rule((SplitCondition("x1", ">", 0.0),), (2, 1))
        r2 = Rule((SplitCondition("x2", "<=", 0.5),), (3, 1))
        kept = dedup_and_decollinearize([r1, r1_dup, r1_comp, r2], d)
        assert kept == [r1, r2]

    def test_drops_constant_columns(self):
        d = toy_data()
        never = Rule((SplitCondition("x1", "<=", -1e9),), (0, 1))
        always = Rule((SplitCondition("x1", "<=", 1e9),), (0, 2))
        keep = Rule((SplitCondition("x1", "<=", 0.0),), (0, 3))
        assert dedup_and_decollinearize([never, always, keep], d) == [keep]

    def test_first_occurrence_wins(self):
        d = toy_data()
        a = Rule((SplitCondition("x1", "<=", 0.0),), (0, 1))
        b = Rule((SplitCondition("x1", ">", 0.0),), (0, 2))
        assert dedup_and_decollinearize([b, a], d) == [b]

    def test_pairwise_columns_distinct(self):
        d = toy_data()
        model = fit_boost(d, BoostConfig(n_trees=30, seed=3))
        kept = dedup_and_decollinearize(extract_rules(model), d)
        cols = {r.evaluate(d).astype(np.uint8).tobytes() for r in kept}
        comps = {(1 - r.evaluate(d).astype(np.uint8)).tobytes() for r in kept}
        assert len(cols) == len(kept)
        assert not (cols & comps)


class TestTermMatrix:
    def _tm(self, include_linear=True):
        d = toy_data(n=150, seed=4)
        model = fit_boost(d, BoostConfig(n_trees=15, seed=5))
        kept = dedup_and_decollinearize(extract_rules(model), d)
        return d, kept, build_term_matrix(kept, d, include_linear)

    def test_rule_columns_are_binary(self):
        _, kept, tm = self._tm()
        rule_block = tm.values[:, : len(kept)]
        assert set(np.unique(rule_block)) <= {0.0, 1.0}

    def test_linear_terms_scaled_to_target_sd(self):
        _, kept, tm = self._tm()
        lin = tm.values[:, len(kept):]
        assert lin.shape[1] == 2  # x1 and x2
        np.testing.assert_allclose(lin.std(axis=0, ddof=1),
                                   LINEAR_TARGET_SD, rtol=1e-12)

    def test_winsor_bounds_clip_new_data(self):
        d, kept, tm = self._tm()
        lin_terms = [t for t in tm.terms if t.kind == "linear"]
        extreme = Dataset([Column("x1", CONTINUOUS, np.array([1e6, -1e6])),
                           Column("x2", CONTINUOUS, np.array([1e6, -1e6]))],
                          outcome=None)
        for t in lin_terms:
            vals = t.evaluate(extreme)
            assert vals[0] == pytest.approx(t.winsor_hi * t.scale)
            assert vals[1] == pytest.approx(t.winsor_lo * t.scale)

    def test_include_linear_false(self):
        _, kept, tm = self._tm(include_linear=False)
        assert tm.n_terms == len(kept)
        assert all(t.kind == "rule" for t in tm.terms)

    def test_zero_variance_feature_skipped_with_warning(self):
        d = Dataset([Column("c", CONTINUOUS, np.ones(50)),
                     Column("x", CONTINUOUS, np.arange(50.0)),
                     Column("y", CONTINUOUS, np.arange(50.0))],
                    outcome="y", task="regression")
        with pytest.warns(UserWarning, match="zero variance"):
            tm = build_term_matrix([], d, include_linear=True)
        assert tm.names == ["linear(x)"]

    def test_restrict_preserves_alignment(self):
        d, _, tm = self._tm()
        idx = np.arange(0, tm.n_terms, 2)
        sub = tm.restrict(idx)
        np.testing.assert_array_equal(sub.values, tm.values[:, idx])
        np.testing.assert_array_equal(sub.evaluate(d), tm.evaluate(d)[:, idx])

    def test_evaluate_matches_training_values(self):
        d, _, tm = self._tm()
        np.testing.assert_array_equal(tm.evaluate(d), tm.values)

    def test_categorical_features_get_no_linear_term(self):
        codes = np.array([0.0, 1.0] * 25)
        d = Dataset([Column("g", CATEGORICAL, codes, ("a", "b")),
                     Column("y", CONTINUOUS, np.arange(50.0))],
                    outcome="y", task="regression")
        tm = build_term_matrix([], d, include_linear=True)
        assert tm.n_terms == 0


class TestRuleFeatures:
    def test_distinct_features_in_order(self):
        r = Rule((SplitCondition("b", "<=", 1.0),
                  SplitCondition("a", ">", 0.0),
                  SplitCondition("b", "<=", 0.5)), (0, 1))
        assert r.features == ("b", "a")
