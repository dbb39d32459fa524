"""Performance indicators and the simulated-outcome generator.

Covers test accuracy (MSE / correct classification rate), per-term quality,
paired-difference confidence intervals, the variance-based selection
stability index, standardized variable importances, and true/false positive
rates for simulated outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CONTINUOUS, Column, Dataset
from .lasso import LassoFit
from .rules import TermMatrix


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class SimSpec:
    features: tuple[str, str, str]
    slopes: tuple[float, float, float]
    noise_sd: float
    seed: int


def simulate_outcome(d: Dataset, seed: int,
                     outcome_name: str = "sim_outcome") -> tuple[Dataset, SimSpec]:
    """Linear outcome from 3 random continuous features plus N(0, 25) noise.

    Slope magnitudes are U(0.5, 2.0) with fair random signs. The returned
    dataset replaces the original outcome with the simulated one and is a
    regression task.
    """
    rng = np.random.default_rng(seed)
    cont = [c for c in d.columns
            if c.kind == CONTINUOUS and c.name != d.outcome]
    if len(cont) < 3:
        raise EvalError("need at least 3 continuous features to simulate")
    picked = rng.choice(len(cont), size=3, replace=False)
    magnitudes = rng.uniform(0.5, 2.0, size=3)
    signs = rng.choice([-1.0, 1.0], size=3)
    slopes = magnitudes * signs
    noise_sd = 5.0
    y = rng.normal(0.0, noise_sd, size=d.n_rows)
    names = []
    for slope, ci in zip(slopes, picked):
        y += slope * cont[ci].values
        names.append(cont[ci].name)
    columns = [c for c in d.columns if c.name != d.outcome]
    columns.append(Column(outcome_name, CONTINUOUS, y))
    sim = Dataset(columns, outcome_name, "regression")
    spec = SimSpec(tuple(names), tuple(float(s) for s in slopes), noise_sd, seed)
    return sim, spec


def accuracy(pred: np.ndarray, truth: np.ndarray, task: str) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.size == 0:
        raise EvalError("predictions and truth must have equal nonzero length")
    if task == "regression":
        return float(np.mean((pred - truth) ** 2))
    return float(np.mean(pred == truth))


def quality_per_term(pred: np.ndarray, truth: np.ndarray, n_terms: int,
                     task: str) -> float:
    """ESS/T for regression (TSS about the test mean), CCR/T otherwise."""
    if n_terms < 1:
        raise EvalError("per-term quality undefined for intercept-only models")
    truth = np.asarray(truth, dtype=np.float64)
    if task == "regression":
        tss = float(np.sum((truth - truth.mean()) ** 2))
        rss = float(np.sum((truth - np.asarray(pred)) ** 2))
        return (tss - rss) / n_terms
    return accuracy(pred, truth, task) / n_terms


@dataclass(frozen=True)
class PairedComparison:
    methods: tuple[str, str]
    mean_diff: float
    se_diff: float
    ci95: tuple[float, float]
    n_iterations: int

    @property
    def significant(self) -> bool:
        lo, hi = self.ci95
        return lo > 0 or hi < 0


def paired_ci(values1, values2, methods: tuple[str, str] = ("m1", "m2")
              ) -> PairedComparison:
    """Mean paired difference with a normal-quantile 95% interval."""
    a = np.asarray(values1, dtype=np.float64)
    b = np.asarray(values2, dtype=np.float64)
    if a.shape != b.shape or a.size < 2:
        raise EvalError("need >= 2 paired values of equal length")
    diff = a - b
    mean = float(diff.mean())
    se = float(math.sqrt(diff.var(ddof=1) / diff.size))
    ci = (mean - 1.96 * se, mean + 1.96 * se)
    return PairedComparison(methods, mean, se, ci, int(diff.size))


def nogueira_stability(selections: list[set], universe: int) -> float:
    """Variance-based stability of feature selection across runs, in [-1, 1].

    1 - mean per-feature indicator variance over the chance-level variance
    implied by the mean selected-set size. Degenerate mean sizes (0 or d)
    imply identical runs and score 1.
    """
    m = len(selections)
    if m < 2:
        raise EvalError("need at least 2 runs")
    if universe < 1:
        raise EvalError("universe must be nonempty")
    z = np.zeros((m, universe))
    for i, sel in enumerate(selections):
        for f in sel:
            z[i, f] = 1.0
    kbar = float(z.sum(axis=1).mean())
    denom = (kbar / universe) * (1.0 - kbar / universe)
    if denom <= 0:
        return 1.0
    s2 = z.var(axis=0, ddof=1)
    return float(1.0 - s2.mean() / denom)


def variable_importances(fit: LassoFit, tm: TermMatrix,
                         feature_names: list[str]) -> dict[str, float]:
    """Standardized importances: |coef| * sd of the term column on train,
    with a rule's importance split equally among its distinct features."""
    imps = {name: 0.0 for name in feature_names}
    for j in fit.active:
        term = tm.terms[j]
        sd = float(tm.values[:, j].std(ddof=1))
        imp = abs(float(fit.coef[j])) * sd
        feats = term.features
        for f in feats:
            if f in imps:
                imps[f] += imp / len(feats)
    return imps


def selected_features(fit: LassoFit, tm: TermMatrix) -> set[str]:
    used: set[str] = set()
    for j in fit.active:
        used.update(tm.terms[j].features)
    return used


def selection_rates(used: set[str], sim: SimSpec,
                    all_features: list[str]) -> tuple[float, float]:
    true_set = set(sim.features)
    noise = [f for f in all_features if f not in true_set]
    tpr = len(used & true_set) / len(true_set)
    fpr = len(used & set(noise)) / len(noise) if noise else 0.0
    return tpr, fpr


def importance_slope_correlation(importances: dict[str, float],
                                 sim: SimSpec) -> float | None:
    """Pearson correlation of importances against |slope| (0 off-support).

    None when either side has zero variance.
    """
    feats = sorted(importances)
    slope_of = {f: abs(s) for f, s in zip(sim.features, sim.slopes)}
    a = np.array([importances[f] for f in feats])
    b = np.array([slope_of.get(f, 0.0) for f in feats])
    if a.std() <= 0 or b.std() <= 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])
