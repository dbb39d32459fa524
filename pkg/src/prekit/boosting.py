"""Stochastic boosting of depth-limited trees.

Regression uses plain gradient boosting on residuals with a constant
learning rate and no line search. Binary classification uses Newton
boosting: trees are grown on the log-loss gradient and each leaf value is
refit as (sum of gradients) / (sum of hessians) over the subsample rows
routed to it. The fitted model doubles as the labeling oracle for
surrogate data generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .tree import TreeConfig, TreeNode, apply_tree, fit_tree, predict_tree

LOGIT_CLAMP = 36.0
HESSIAN_FLOOR = 1e-6


class BoostError(ValueError):
    pass


@dataclass
class BoostConfig:
    n_trees: int = 500
    learning_rate: float = 0.01
    subsample_fraction: float = 0.5
    with_replacement: bool = False
    tree: TreeConfig = field(default_factory=TreeConfig)
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.subsample_fraction <= 1:
            raise BoostError("subsample_fraction must lie in (0, 1]")
        if self.learning_rate <= 0:
            raise BoostError("learning_rate must be positive")


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(eta, -LOGIT_CLAMP, LOGIT_CLAMP)))


@dataclass
class BoostModel:
    baseline: float
    trees: list[TreeNode]
    learning_rate: float
    task: str  # "regression" | "binary_classification"
    positive_level: str | None = None

    def predict(self, data: Dataset) -> np.ndarray:
        """Raw model output: values (regression) or logits (classification)."""
        out = np.full(data.n_rows, self.baseline)
        for t in self.trees:
            out += self.learning_rate * predict_tree(t, data)
        return out

    def oracle_label(self, data: Dataset, mode: str = "logit") -> np.ndarray:
        """Labels for generated rows: predicted values, logits, or sigma(logit)."""
        raw = self.predict(data)
        if self.task == "regression" or mode == "logit":
            return raw
        if mode == "value":
            return _sigmoid(raw)
        raise BoostError(f"unknown oracle label mode {mode!r}")

    def predict_class(self, data: Dataset) -> np.ndarray:
        """0/1 class labels; logit > 0 maps to the positive class."""
        if self.task != "binary_classification":
            raise BoostError("class prediction requires a classification model")
        return (self.predict(data) > 0).astype(np.float64)

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "learning_rate": self.learning_rate,
            "task": self.task,
            "positive_level": self.positive_level,
            "trees": [t.to_dict() for t in self.trees],
        }

    @staticmethod
    def from_dict(d: dict) -> "BoostModel":
        return BoostModel(
            baseline=float(d["baseline"]),
            trees=[TreeNode.from_dict(t) for t in d["trees"]],
            learning_rate=float(d["learning_rate"]),
            task=d["task"],
            positive_level=d.get("positive_level"),
        )


def _subsample(rng: np.random.Generator, n: int, cfg: BoostConfig) -> np.ndarray:
    size = max(2, int(round(cfg.subsample_fraction * n)))
    if cfg.with_replacement:
        return np.sort(rng.integers(0, n, size=size))
    return np.sort(rng.choice(n, size=size, replace=False))


def fit_boost(train: Dataset, cfg: BoostConfig) -> BoostModel:
    if train.n_rows == 0:
        raise BoostError("empty training set")
    y = train.outcome_values()
    rng = np.random.default_rng(cfg.seed)

    if train.task == "binary_classification":
        return _fit_newton(train, y, cfg, rng)

    baseline = float(y.mean())
    model = BoostModel(baseline, [], cfg.learning_rate, "regression")
    current = np.full(train.n_rows, baseline)
    for _ in range(cfg.n_trees):
        residual = y - current
        idx = _subsample(rng, train.n_rows, cfg)
        tree = fit_tree(train, residual, cfg.tree, idx)
        model.trees.append(tree)
        current += cfg.learning_rate * predict_tree(tree, train)
    return model


def _fit_newton(train: Dataset, y: np.ndarray, cfg: BoostConfig,
                rng: np.random.Generator) -> BoostModel:
    p_pos = float(y.mean())
    if p_pos in (0.0, 1.0):
        raise BoostError("classification outcome has a single class")
    baseline = math.log(p_pos / (1.0 - p_pos))
    positive = train.column(train.outcome).levels[1]
    model = BoostModel(baseline, [], cfg.learning_rate, "binary_classification",
                       positive_level=positive)
    eta = np.full(train.n_rows, baseline)
    for _ in range(cfg.n_trees):
        prob = _sigmoid(eta)
        gradient = y - prob
        hessian = prob * (1.0 - prob)
        idx = _subsample(rng, train.n_rows, cfg)
        tree = fit_tree(train, gradient, cfg.tree, idx)
        _refit_leaves(tree, train, idx, gradient, hessian)
        model.trees.append(tree)
        eta += cfg.learning_rate * predict_tree(tree, train)
    return model


def _refit_leaves(tree: TreeNode, train: Dataset, idx: np.ndarray,
                  gradient: np.ndarray, hessian: np.ndarray) -> None:
    """Newton step: leaf value <- sum(grad) / max(sum(hess), floor)."""
    leaves = apply_tree(tree, train)
    groups: dict[int, list[int]] = {}
    for i in idx:
        groups.setdefault(id(leaves[i]), []).append(i)
    refs = {id(leaves[i]): leaves[i] for i in idx}
    for key, rows in groups.items():
        rows_a = np.asarray(rows)
        denom = max(float(hessian[rows_a].sum()), HESSIAN_FLOOR)
        refs[key].prediction = float(gradient[rows_a].sum() / denom)


def predict_boost(model: BoostModel, data: Dataset) -> np.ndarray:
    return model.predict(data)


def oracle_label(model: BoostModel, data: Dataset, mode: str = "logit") -> np.ndarray:
    return model.oracle_label(data, mode)
