"""Marginal-resampling data generation and the two surrogate pipelines.

Generated rows draw each feature independently from its training values
(marginals preserved, joint structure discarded), deduplicate, and are
labeled by the boosting oracle. The surrogate pipeline runs a two-level
lasso entirely on generated data; the nested pipeline uses the level-1
survivors to restrict a lasso on the real training data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .boosting import BoostModel
from .data import Column, Dataset
from .lasso import LassoConfig, LassoFit, cv_lasso
from .rules import TermMatrix


class SurrogateError(ValueError):
    pass


@dataclass
class GenConfig:
    n_gen: int = 10_000
    seed: int = 0
    label_mode: str = "logit"  # oracle labels for classification tasks

    def __post_init__(self):
        if self.n_gen < 1:
            raise SurrogateError("n_gen must be >= 1")


@dataclass
class GeneratedDataset:
    features: Dataset
    oracle_labels: np.ndarray
    provenance: dict

    @property
    def n_rows(self) -> int:
        return self.features.n_rows


def generate_features(train: Dataset, cfg: GenConfig) -> Dataset:
    """Independent with-replacement resampling per column, then row dedup.

    The realized row count can fall below n_gen on low-cardinality data;
    first occurrences win, in draw order.
    """
    if train.n_rows == 0:
        raise SurrogateError("empty training data")
    rng = np.random.default_rng(cfg.seed)
    cols = []
    for col in train.feature_columns:
        draws = rng.choice(col.values, size=cfg.n_gen, replace=True)
        cols.append(Column(col.name, col.kind, draws, col.levels))
    stacked = np.column_stack([c.values for c in cols])
    _, first = np.unique(stacked, axis=0, return_index=True)
    keep = np.sort(first)
    return Dataset([c.take(keep) for c in cols], outcome=None, task=None)


def make_generated(train: Dataset, oracle: BoostModel,
                   cfg: GenConfig) -> GeneratedDataset:
    feats = generate_features(train, cfg)
    mode = cfg.label_mode if oracle.task == "binary_classification" else "value"
    labels = oracle.oracle_label(feats, mode=mode)
    return GeneratedDataset(feats, labels, {
        "oracle_task": oracle.task,
        "label_mode": mode,
        "seed": cfg.seed,
        "n_gen_requested": cfg.n_gen,
        "n_gen_realized": feats.n_rows,
    })


@dataclass
class SelectionResult:
    """Final fit plus the level-1 audit trail needed for subset checks."""

    fit: LassoFit
    level1_fit: LassoFit
    survivors: np.ndarray  # term indices kept by the level-1 lasso
    intercept_only: bool

    @property
    def active_terms(self) -> np.ndarray:
        """Active term indices of the final fit, in original term indexing."""
        return self.survivors[self.fit.active]


def _level_seeds(seed: int) -> tuple[int, int]:
    ss = np.random.SeedSequence(seed)
    a, b = ss.spawn(2)
    return int(a.generate_state(1)[0]), int(b.generate_state(1)[0])


def _restricted_fit(tm: TermMatrix, data: Dataset, y: np.ndarray,
                    survivors: np.ndarray, lasso_cfg: LassoConfig,
                    family: str) -> LassoFit:
    sub = tm.restrict(survivors)
    X = sub.evaluate(data)
    return cv_lasso(X, y, lasso_cfg, family=family, term_names=sub.names)


def _level1(tm: TermMatrix, train: Dataset, oracle: BoostModel,
            gen_cfg: GenConfig, lasso_cfg: LassoConfig,
            seed: int) -> tuple[LassoFit, np.ndarray]:
    cfg1 = GenConfig(gen_cfg.n_gen, seed, gen_cfg.label_mode)
    gen = make_generated(train, oracle, cfg1)
    X = tm.evaluate(gen.features)
    cfg = LassoConfig(n_lambda=lasso_cfg.n_lambda,
                      lambda_min_ratio=lasso_cfg.lambda_min_ratio,
                      k=3, rule=lasso_cfg.rule, tol=lasso_cfg.tol,
                      max_iter=lasso_cfg.max_iter, seed=lasso_cfg.seed)
    fit = cv_lasso(X, gen.oracle_labels, cfg, family="gaussian",
                   term_names=tm.names)
    survivors = fit.active
    if survivors.size > train.n_rows:
        warnings.warn("level-1 surrogate kept more terms than training rows; "
                      "nested selection may lose its consistency guarantee")
    return fit, survivors


def surrogate_select(tm: TermMatrix, train: Dataset, oracle: BoostModel,
                     gen_cfg: GenConfig, lasso_cfg: LassoConfig
                     ) -> SelectionResult:
    """Two-level lasso on independently generated, oracle-labeled data."""
    seed1, seed2 = _level_seeds(gen_cfg.seed)
    fit1, survivors = _level1(tm, train, oracle, gen_cfg, lasso_cfg, seed1)
    if survivors.size == 0:
        return SelectionResult(fit1, fit1, survivors, intercept_only=True)
    cfg2 = GenConfig(gen_cfg.n_gen, seed2, gen_cfg.label_mode)
    gen2 = make_generated(train, oracle, cfg2)
    sub = tm.restrict(survivors)
    X2 = sub.evaluate(gen2.features)
    lcfg2 = LassoConfig(n_lambda=lasso_cfg.n_lambda,
                        lambda_min_ratio=lasso_cfg.lambda_min_ratio,
                        k=3, rule=lasso_cfg.rule, tol=lasso_cfg.tol,
                        max_iter=lasso_cfg.max_iter, seed=lasso_cfg.seed)
    fit2 = cv_lasso(X2, gen2.oracle_labels, lcfg2, family="gaussian",
                    term_names=sub.names)
    return SelectionResult(fit2, fit1, survivors, intercept_only=False)


def nested_select(tm: TermMatrix, train: Dataset, oracle: BoostModel,
                  gen_cfg: GenConfig, lasso_cfg: LassoConfig,
                  family: str | None = None) -> SelectionResult:
    """Level-1 surrogate screening, then a k-fold lasso on the real data."""
    seed1, _ = _level_seeds(gen_cfg.seed)
    fit1, survivors = _level1(tm, train, oracle, gen_cfg, lasso_cfg, seed1)
    if survivors.size == 0:
        return SelectionResult(fit1, fit1, survivors, intercept_only=True)
    if family is None:
        family = ("binomial" if train.task == "binary_classification"
                  else "gaussian")
    y = train.outcome_values()
    fit = _restricted_fit(tm, train, y, survivors, lasso_cfg, family)
    return SelectionResult(fit, fit1, survivors, intercept_only=False)
