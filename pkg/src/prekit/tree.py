"""Depth-limited regression tree with test-then-split feature selection.

Feature choice at each node uses a correlation test (Pearson r against the
response, two-sided p from the t distribution, Bonferroni-adjusted over the
candidate features); splitting then maximizes the between-groups reduction
in sum of squared errors over observed-value cutpoints. Categorical
features are scanned as if ordinal after sorting levels by mean response.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data import CATEGORICAL, CONTINUOUS, Column, Dataset


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class SplitCondition:
    feature: str
    op: str  # "<=", ">", "in", "not_in"
    threshold: float | tuple[str, ...]

    def evaluate(self, column: Column) -> np.ndarray:
        if self.op in ("<=", ">"):
            x = column.values
            return x <= self.threshold if self.op == "<=" else x > self.threshold
        codes = {column.levels.index(lv) for lv in self.threshold if lv in column.levels}
        member = np.isin(column.values, sorted(codes))
        return member if self.op == "in" else ~member

    def __str__(self) -> str:
        if self.op in ("<=", ">"):
            return f"{self.feature} {self.op} {self.threshold:g}"
        inner = ",".join(self.threshold)
        sym = "in" if self.op == "in" else "not in"
        return f"{self.feature} {sym} {{{inner}}}"

    def to_dict(self) -> dict:
        thr = self.threshold if self.op in ("<=", ">") else list(self.threshold)
        return {"feature": self.feature, "op": self.op, "threshold": thr}

    @staticmethod
    def from_dict(d: dict) -> "SplitCondition":
        thr = d["threshold"]
        if d["op"] not in ("<=", ">"):
            thr = tuple(thr)
        return SplitCondition(d["feature"], d["op"], thr)


@dataclass
class TreeNode:
    prediction: float
    depth: int
    n_samples: int
    condition: SplitCondition | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.condition is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": self.prediction, "n": self.n_samples}
        return {
            "condition": self.condition.to_dict(),
            "n": self.n_samples,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict, depth: int = 0) -> "TreeNode":
        if "leaf" in d:
            return TreeNode(float(d["leaf"]), depth, int(d.get("n", 0)))
        left = TreeNode.from_dict(d["left"], depth + 1)
        right = TreeNode.from_dict(d["right"], depth + 1)
        n = int(d.get("n", left.n_samples + right.n_samples))
        pred = (left.prediction * left.n_samples + right.prediction * right.n_samples) / max(n, 1)
        return TreeNode(pred, depth, n, SplitCondition.from_dict(d["condition"]), left, right)


@dataclass
class TreeConfig:
    max_depth: int = 3
    alpha: float = 0.05
    min_node_size: int = 7

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise TreeError("alpha must lie in (0, 1)")
        if self.max_depth < 1:
            raise TreeError("max_depth must be >= 1")


def _scores(x: np.ndarray, y: np.ndarray, kind: str) -> np.ndarray | None:
    """Per-row association score: raw value, or level mean response."""
    if kind == CONTINUOUS:
        return x
    score = np.empty_like(x)
    for code in np.unique(x):
        mask = x == code
        score[mask] = y[mask].mean()
    return score


def _correlation_pvalue(x: np.ndarray, y: np.ndarray) -> float | None:
    """Two-sided p-value of Pearson r via t with n-2 df; None if undefined."""
    n = x.size
    if n < 3:
        return None
    sx = x.std()
    sy = y.std()
    if sx <= 0 or sy <= 0:
        return None
    r = float(np.dot(x - x.mean(), y - y.mean()) / (n * sx * sy))
    r = min(1.0, max(-1.0, r))
    denom = 1.0 - r * r
    if denom <= 1e-300:
        return 0.0
    t = abs(r) * np.sqrt((n - 2) / denom)
    return float(2.0 * stats.t.sf(t, n - 2))


def select_split_feature(data: Dataset, response: np.ndarray, idx: np.ndarray,
                         alpha: float) -> tuple[str, float] | None:
    """Pick the feature with the smallest Bonferroni-adjusted p-value.

    Returns None when no feature reaches significance (or no test is
    defined). Bonferroni multiplies by the number of features that yielded
    a defined test at this node; undefined tests count as p = 1.
    """
    y = response[idx]
    if np.unique(y).size < 2:
        return None
    raw: list[tuple[str, float]] = []
    for col in data.feature_columns:
        x = col.values[idx]
        score = _scores(x, y, col.kind)
        p = _correlation_pvalue(score, y)
        if p is not None:
            raw.append((col.name, p))
    if not raw:
        return None
    m = len(raw)
    name, p = min(raw, key=lambda t: t[1])
    adj = min(1.0, p * m)
    if adj > alpha:
        return None
    return name, adj


def _scan_cutpoints(sums: np.ndarray, sqsums: np.ndarray, counts: np.ndarray,
                    min_child: int) -> tuple[int, float] | None:
    """Best prefix boundary by SSE reduction over grouped, ordered values.

    Inputs are per-group aggregates in scan order. Returns (boundary index
    of the last group on the left, reduction); ties keep the earliest
    boundary.
    """
    tot_n = counts.sum()
    tot_s = sums.sum()
    tot_s2 = sqsums.sum()
    sse_total = tot_s2 - tot_s * tot_s / tot_n
    cn = np.cumsum(counts)[:-1]
    cs = np.cumsum(sums)[:-1]
    cs2 = np.cumsum(sqsums)[:-1]
    rn = tot_n - cn
    valid = (cn >= min_child) & (rn >= min_child)
    if not valid.any():
        return None
    sse_l = cs2 - cs * cs / cn
    sse_r = (tot_s2 - cs2) - (tot_s - cs) ** 2 / rn
    reduction = np.where(valid, sse_total - sse_l - sse_r, -np.inf)
    best = int(np.argmax(reduction))  # argmax keeps the first maximizer
    return best, float(reduction[best])


def best_threshold(data: Dataset, response: np.ndarray, idx: np.ndarray,
                   feature: str, min_node_size: int = 1) -> SplitCondition | None:
    """SSE-optimal split of a node on one feature.

    Continuous: threshold is an observed value; left branch is inclusive.
    Categorical: levels ordered by mean response, scanned as prefixes; the
    lexicographically smaller subset wins reduction ties.
    """
    col = data.column(feature)
    x = col.values[idx]
    y = response[idx]
    if np.unique(x).size < 2:
        raise TreeError(f"feature {feature!r} is constant on this node")

    if col.kind == CONTINUOUS:
        order = np.argsort(x, kind="stable")
        xs, ys = x[order], y[order]
        vals, starts = np.unique(xs, return_index=True)
        bounds = np.append(starts, xs.size)
        counts = np.diff(bounds)
        sums = np.add.reduceat(ys, starts)
        sqsums = np.add.reduceat(ys * ys, starts)
        hit = _scan_cutpoints(sums, sqsums, counts, min_node_size)
        if hit is None:
            return None
        return SplitCondition(feature, "<=", float(vals[hit[0]]))

    codes = np.unique(x).astype(int)
    stats_ = []
    for c in codes:
        mask = x == c
        stats_.append((y[mask].mean(), col.levels[c], c, mask.sum(),
                       y[mask].sum(), (y[mask] ** 2).sum()))
    stats_.sort(key=lambda t: (t[0], t[1]))
    counts = np.array([s[3] for s in stats_], dtype=float)
    sums = np.array([s[4] for s in stats_])
    sqsums = np.array([s[5] for s in stats_])
    hit = _scan_cutpoints(sums, sqsums, counts, min_node_size)
    if hit is None:
        return None
    boundary, best_red = hit
    best_subset = tuple(sorted(s[1] for s in stats_[: boundary + 1]))
    # break exact ties toward the lexicographically smaller subset
    cn = np.cumsum(counts)[:-1]
    for b in range(len(stats_) - 1):
        if b == boundary:
            continue
        if cn[b] < min_node_size or counts.sum() - cn[b] < min_node_size:
            continue
        alt = _scan_reduction_at(sums, sqsums, counts, b)
        if np.isclose(alt, best_red, rtol=0, atol=1e-12):
            subset = tuple(sorted(s[1] for s in stats_[: b + 1]))
            if subset < best_subset:
                best_subset = subset
    return SplitCondition(feature, "in", best_subset)


def _scan_reduction_at(sums, sqsums, counts, b) -> float:
    tot_n, tot_s, tot_s2 = counts.sum(), sums.sum(), sqsums.sum()
    ln, ls, ls2 = counts[: b + 1].sum(), sums[: b + 1].sum(), sqsums[: b + 1].sum()
    rn, rs, rs2 = tot_n - ln, tot_s - ls, tot_s2 - ls2
    sse_total = tot_s2 - tot_s * tot_s / tot_n
    return float(sse_total - (ls2 - ls * ls / ln) - (rs2 - rs * rs / rn))


def fit_tree(data: Dataset, response: np.ndarray, cfg: TreeConfig,
             subsample: np.ndarray | None = None) -> TreeNode:
    """Grow a depth-limited tree on ``response`` over ``subsample`` rows."""
    idx = np.arange(data.n_rows) if subsample is None else np.asarray(subsample)
    if idx.size < 2:
        raise TreeError("need at least 2 rows to fit a tree")
    if not np.all(np.isfinite(response[idx])):
        raise TreeError("non-finite response")
    return _grow(data, response, idx, 0, cfg)


def _grow(data: Dataset, response: np.ndarray, idx: np.ndarray, depth: int,
          cfg: TreeConfig) -> TreeNode:
    y = response[idx]
    node = TreeNode(float(y.mean()), depth, int(idx.size))
    if depth >= cfg.max_depth or idx.size < 2 * cfg.min_node_size:
        return node
    picked = select_split_feature(data, response, idx, cfg.alpha)
    if picked is None:
        return node
    cond = best_threshold(data, response, idx, picked[0], cfg.min_node_size)
    if cond is None:
        return node
    mask = cond.evaluate(data.column(cond.feature))[idx]
    node.condition = cond
    node.left = _grow(data, response, idx[mask], depth + 1, cfg)
    node.right = _grow(data, response, idx[~mask], depth + 1, cfg)
    return node


def predict_row(tree: TreeNode, row: dict) -> float:
    """Route a single row (mapping feature -> value) to its leaf value."""
    node = tree
    while not node.is_leaf:
        cond = node.condition
        if cond.feature not in row:
            raise TreeError(f"row lacks feature {cond.feature!r}")
        v = row[cond.feature]
        if cond.op == "<=":
            go_left = v <= cond.threshold
        elif cond.op == ">":
            go_left = v > cond.threshold
        elif cond.op == "in":
            go_left = v in cond.threshold
        else:
            go_left = v not in cond.threshold
        node = node.left if go_left else node.right
    return node.prediction


def predict_tree(tree: TreeNode, data: Dataset) -> np.ndarray:
    """Vectorized prediction for every row of ``data``."""
    out = np.empty(data.n_rows)
    _route(tree, data, np.arange(data.n_rows), out, None)
    return out


def apply_tree(tree: TreeNode, data: Dataset) -> list[TreeNode]:
    """Leaf node reached by each row (used for Newton leaf refitting)."""
    leaves: list[TreeNode | None] = [None] * data.n_rows
    _route(tree, data, np.arange(data.n_rows), None, leaves)
    return leaves  # type: ignore[return-value]


def _route(node: TreeNode, data: Dataset, idx: np.ndarray,
           out: np.ndarray | None, leaves: list | None) -> None:
    if idx.size == 0:
        return
    if node.is_leaf:
        if out is not None:
            out[idx] = node.prediction
        if leaves is not None:
            for i in idx:
                leaves[i] = node
        return
    mask = node.condition.evaluate(data.column(node.condition.feature))[idx]
    _route(node.left, data, idx[mask], out, leaves)
    _route(node.right, data, idx[~mask], out, leaves)
