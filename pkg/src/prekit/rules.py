"""Rule harvesting and design-matrix construction.

Every non-root node of every boosted tree yields one rule: the conjunction
of split conditions on the path from the root to that node. Exact
duplicates and exact complements (collinear with the intercept) are then
dropped against the training data, and linear terms are appended after
winsorization and 0.4/sd scaling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .boosting import BoostModel
from .data import CONTINUOUS, Dataset, column_quantile
from .tree import SplitCondition, TreeNode

WINSOR_LO = 0.025
WINSOR_HI = 0.975
LINEAR_TARGET_SD = 0.4


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    conditions: tuple[SplitCondition, ...]
    source: tuple[int, int]  # (tree index, preorder node index)

    def evaluate(self, data: Dataset) -> np.ndarray:
        mask = np.ones(data.n_rows, dtype=bool)
        for cond in self.conditions:
            mask &= cond.evaluate(data.column(cond.feature))
        return mask.astype(np.float64)

    @property
    def features(self) -> tuple[str, ...]:
        seen = []
        for c in self.conditions:
            if c.feature not in seen:
                seen.append(c.feature)
        return tuple(seen)

    def __str__(self) -> str:
        return " & ".join(str(c) for c in self.conditions)


def _negate(cond: SplitCondition) -> SplitCondition:
    flip = {"<=": ">", ">": "<=", "in": "not_in", "not_in": "in"}
    return SplitCondition(cond.feature, flip[cond.op], cond.threshold)


def extract_rules(model: BoostModel) -> list[Rule]:
    """All path rules, ordered by tree index then preorder node index."""
    rules: list[Rule] = []
    for t_i, tree in enumerate(model.trees):
        counter = [0]

        def walk(node: TreeNode, path: tuple[SplitCondition, ...]):
            node_i = counter[0]
            counter[0] += 1
            if path:
                rules.append(Rule(path, (t_i, node_i)))
            if not node.is_leaf:
                walk(node.left, path + (node.condition,))
                walk(node.right, path + (_negate(node.condition),))

        walk(tree, ())
    return rules


def dedup_and_decollinearize(rules: list[Rule], train: Dataset) -> list[Rule]:
    """Keep the first of any duplicate/complement pair of indicator columns.

    Constant columns (rules that never or always fire on train) are dropped
    too; they are collinear with the intercept.
    """
    kept: list[Rule] = []
    seen: set[bytes] = set()
    for rule in rules:
        col = rule.evaluate(train).astype(np.uint8)
        if col.min() == col.max():
            continue
        key = col.tobytes()
        comp = (1 - col).tobytes()
        if key in seen or comp in seen:
            continue
        seen.add(key)
        kept.append(rule)
    return kept


@dataclass(frozen=True)
class Term:
    kind: str  # "rule" | "linear"
    rule: Rule | None = None
    feature: str | None = None
    winsor_lo: float = 0.0
    winsor_hi: float = 0.0
    scale: float = 1.0

    @property
    def name(self) -> str:
        return str(self.rule) if self.kind == "rule" else f"linear({self.feature})"

    @property
    def features(self) -> tuple[str, ...]:
        return self.rule.features if self.kind == "rule" else (self.feature,)

    def evaluate(self, data: Dataset) -> np.ndarray:
        if self.kind == "rule":
            return self.rule.evaluate(data)
        x = data.column(self.feature).values
        return np.clip(x, self.winsor_lo, self.winsor_hi) * self.scale


@dataclass
class TermMatrix:
    terms: list[Term]
    values: np.ndarray  # rows x terms, evaluated on the training split

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def names(self) -> list[str]:
        return [t.name for t in self.terms]

    def evaluate(self, data: Dataset) -> np.ndarray:
        if not self.terms:
            return np.empty((data.n_rows, 0))
        return np.column_stack([t.evaluate(data) for t in self.terms])

    def restrict(self, indices: np.ndarray) -> "TermMatrix":
        indices = np.asarray(indices, dtype=int)
        return TermMatrix([self.terms[i] for i in indices], self.values[:, indices])


def build_term_matrix(rules: list[Rule], train: Dataset,
                      include_linear: bool = True) -> TermMatrix:
    """Rule indicator columns first, then winsorized scaled linear terms.

    Winsor bounds (.025/.975 quantiles) and the 0.4/sd scale factor are
    frozen from the training split so that generated and test rows share
    one coordinate system. Zero-variance features yield no linear term.
    """
    terms = [Term("rule", rule=r) for r in rules]
    if include_linear:
        for col in train.feature_columns:
            if col.kind != CONTINUOUS:
                continue
            lo = column_quantile(col, WINSOR_LO)
            hi = column_quantile(col, WINSOR_HI)
            wz = np.clip(col.values, lo, hi)
            sd = float(wz.std(ddof=1))
            if sd <= 0:
                warnings.warn(f"feature {col.name!r} has zero variance after "
                              "winsorizing; linear term skipped")
                continue
            terms.append(Term("linear", feature=col.name, winsor_lo=lo,
                              winsor_hi=hi, scale=LINEAR_TARGET_SD / sd))
    tm = TermMatrix(terms, np.empty((train.n_rows, 0)))
    tm.values = tm.evaluate(train)
    return tm


def evaluate_terms(tm: TermMatrix, data: Dataset) -> np.ndarray:
    return tm.evaluate(data)
