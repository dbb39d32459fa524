import numpy as np
import pytest

from prekit.boosting import (BoostConfig, BoostError, BoostModel, fit_boost,
                             _subsample)
from prekit.data import CATEGORICAL, CONTINUOUS, Column, Dataset
from prekit.tree import TreeConfig


def regression_data(n=200, seed=0):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    y = 3 * x1 - 2 * x2 + rng.normal(size=n) * 0.5
    return Dataset([Column("x1", CONTINUOUS, x1),
                    Column("x2", CONTINUOUS, x2),
                    Column("y", CONTINUOUS, y)], outcome="y",
                   task="regression")


def classification_data(n=300, seed=1):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    p = 1 / (1 + np.exp(-(2 * x1 - x2)))
    codes = (rng.random(n) < p).astype(float)
    y = Column("cls", CATEGORICAL, codes, ("neg", "pos"))
    return Dataset([Column("x1", CONTINUOUS, x1),
                    Column("x2", CONTINUOUS, x2), y], outcome="cls",
                   task="binary_classification")


class TestConfig:
    def test_validation(self):
        with pytest.raises(BoostError):
            BoostConfig(subsample_fraction=0.0)
        with pytest.raises(BoostError):
            BoostConfig(subsample_fraction=1.5)
        with pytest.raises(BoostError):
            BoostConfig(learning_rate=0.0)


class TestSubsample:
    def test_without_replacement_unique(self):
        rng = np.random.default_rng(2)
        idx = _subsample(rng, 100, BoostConfig(subsample_fraction=0.5))
        assert idx.size == 50
        assert np.unique(idx).size == 50

    def test_with_replacement_allows_repeats(self):
        rng = np.random.default_rng(3)
        cfg = BoostConfig(subsample_fraction=1.0, with_replacement=True)
        idx = _subsample(rng, 50, cfg)
        assert idx.size == 50
        assert np.unique(idx).size < 50  # overwhelmingly likely


class TestRegressionBoosting:
    def test_baseline_is_training_mean(self):
        d = regression_data()
        model = fit_boost(d, BoostConfig(n_trees=1, seed=0))
        assert model.baseline == pytest.approx(d.outcome_values().mean())

    def test_training_error_decreases(self):
        d = regression_data()
        y = d.outcome_values()
        base_mse = np.mean((y - y.mean()) ** 2)
        model = fit_boost(d, BoostConfig(n_trees=100, seed=0))
        fit_mse = np.mean((y - model.predict(d)) ** 2)
        assert fit_mse < base_mse * 0.8

    def test_deterministic_in_seed(self):
        d = regression_data()
        a = fit_boost(d, BoostConfig(n_trees=10, seed=5)).predict(d)
        b = fit_boost(d, BoostConfig(n_trees=10, seed=5)).predict(d)
        c = fit_boost(d, BoostConfig(n_trees=10, seed=6)).predict(d)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_monotone_without_subsampling(self):
        # full-sample residual boosting can never increase the training SSE
        d = regression_data(n=120, seed=7)
        y = d.outcome_values()
        cfg = BoostConfig(n_trees=40, subsample_fraction=1.0, seed=0)
        model = fit_boost(d, cfg)
        current = np.full(d.n_rows, model.baseline)
        prev = np.sum((y - current) ** 2)
        from prekit.tree import predict_tree
        for tree in model.trees:
            current = current + cfg.learning_rate * predict_tree(tree, d)
            sse = np.sum((y - current) ** 2)
            assert sse <= prev + 1e-10
            prev = sse

    def test_zero_rows_rejected(self):
        d = regression_data()
        with pytest.raises(BoostError):
            fit_boost(d.subset(np.array([], dtype=int)), BoostConfig())


class TestNewtonBoosting:
    def test_baseline_is_log_odds(self):
        d = classification_data()
        model = fit_boost(d, BoostConfig(n_trees=1, seed=0))
        p = d.outcome_values().mean()
        assert model.baseline == pytest.approx(np.log(p / (1 - p)))
        assert model.positive_level == "pos"

    def test_beats_chance_on_train(self):
        d = classification_data()
        model = fit_boost(d, BoostConfig(n_trees=150, seed=0))
        y = d.outcome_values()
        ccr = np.mean(model.predict_class(d) == y)
        assert ccr > max(y.mean(), 1 - y.mean()) + 0.05

    def test_single_class_rejected(self):
        d = classification_data()
        codes = d.column("cls").values
        only = np.flatnonzero(codes == 1.0)
        with pytest.raises(BoostError):
            fit_boost(d.subset(only), BoostConfig(n_trees=1))

    def test_class_prediction_requires_classifier(self):
        model = fit_boost(regression_data(), BoostConfig(n_trees=1))
        with pytest.raises(BoostError):
            model.predict_class(regression_data())


class TestOracleLabels:
    def test_regression_labels_are_predictions(self):
        d = regression_data()
        model = fit_boost(d, BoostConfig(n_trees=5, seed=0))
        np.testing.assert_array_equal(model.oracle_label(d), model.predict(d))

    def test_logit_and_value_modes(self):
        d = classification_data()
        model = fit_boost(d, BoostConfig(n_trees=5, seed=0))
        logits = model.oracle_label(d, mode="logit")
        probs = model.oracle_label(d, mode="value")
        np.testing.assert_allclose(probs, 1 / (1 + np.exp(-logits)))
        assert np.all((probs > 0) & (probs < 1))
        with pytest.raises(BoostError):
            model.oracle_label(d, mode="bogus")


class TestSerialization:
    def test_round_trip_predictions(self):
        for data in (regression_data(), classification_data()):
            model = fit_boost(data, BoostConfig(n_trees=8, seed=0))
            clone = BoostModel.from_dict(model.to_dict())
            np.testing.assert_allclose(clone.predict(data),
                                       model.predict(data))
            assert clone.task == model.task
            assert clone.positive_level == model.positive_level
