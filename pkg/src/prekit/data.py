"""Tabular data model: typed columns, CSV ingestion, splitting, quantiles.

Continuous cells are stored as float64 with NaN as the missing marker.
Categorical cells are stored as integer level codes (-1 = missing) plus an
explicit level list fixed in first-appearance order at load time, so that
splits and dummy coding stay deterministic across runs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"

#: cell spellings treated as missing in CSV input
MISSING_TOKENS = {"", "NA", "N/A", "NaN", "nan", "?"}


class DataError(ValueError):
    pass


@dataclass
class Column:
    name: str
    kind: str  # CONTINUOUS or CATEGORICAL
    values: np.ndarray  # float64; categorical columns hold level codes
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise DataError(f"unknown column kind {self.kind!r}")
        if self.kind == CATEGORICAL and not self.levels:
            raise DataError(f"categorical column {self.name!r} needs levels")

    def __len__(self) -> int:
        return len(self.values)

    def missing_mask(self) -> np.ndarray:
        if self.kind == CONTINUOUS:
            return np.isnan(self.values)
        return self.values < 0

    def non_missing(self) -> np.ndarray:
        return self.values[~self.missing_mask()]

    def take(self, idx: np.ndarray) -> "Column":
        return Column(self.name, self.kind, self.values[idx], self.levels)

    def cell_str(self, i: int) -> str:
        v = self.values[i]
        if self.kind == CONTINUOUS:
            return "NA" if math.isnan(v) else repr(float(v))
        return "NA" if v < 0 else self.levels[int(v)]


@dataclass
class Dataset:
    """Immutable-by-convention columnar table.

    ``outcome`` may be None for feature-only tables (e.g. generated data).
    """

    columns: list[Column]
    outcome: str | None
    task: str | None = None  # "regression" | "binary_classification"
    _matrix_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise DataError("columns have unequal lengths")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names")
        if self.outcome is not None:
            out = self.column(self.outcome)
            if self.task == "binary_classification":
                if out.kind != CATEGORICAL or len(out.levels) != 2:
                    raise DataError("binary outcome needs exactly 2 levels")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise DataError(f"no column named {name!r}")

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.columns if c.name != self.outcome]

    @property
    def feature_columns(self) -> list[Column]:
        return [c for c in self.columns if c.name != self.outcome]

    def outcome_values(self) -> np.ndarray:
        """Numeric outcome: raw values, or 0/1 codes for classification.

        The second level in first-appearance order is the positive class.
        """
        if self.outcome is None:
            raise DataError("dataset has no outcome column")
        out = self.column(self.outcome)
        if self.task == "binary_classification":
            return (out.values == 1).astype(np.float64)
        return out.values.copy()

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset([c.take(idx) for c in self.columns], self.outcome, self.task)

    def feature_matrix(self) -> tuple[np.ndarray, list[Column]]:
        """Dense float view of the feature columns (categoricals as codes).

        Cached; callers must not mutate the returned array.
        """
        if "X" not in self._matrix_cache:
            cols = self.feature_columns
            X = np.column_stack([c.values for c in cols]) if cols else np.empty((self.n_rows, 0))
            self._matrix_cache["X"] = (np.ascontiguousarray(X), cols)
        return self._matrix_cache["X"]

    def row_dict(self, i: int) -> dict:
        d = {}
        for c in self.columns:
            if c.kind == CONTINUOUS:
                d[c.name] = float(c.values[i])
            else:
                v = c.values[i]
                d[c.name] = None if v < 0 else c.levels[int(v)]
        return d

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([c.name for c in self.columns])
            for i in range(self.n_rows):
                w.writerow([c.cell_str(i) for c in self.columns])


def load_csv(path, schema: dict[str, str], outcome: str | None,
             task: str | None = None) -> Dataset:
    """Parse a header-ful CSV into a Dataset.

    ``schema`` maps column name -> kind; columns absent from the schema
    default to continuous. Unparseable continuous cells become missing.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty CSV") from None
        rows = [r for r in reader if r]
    if not rows:
        raise DataError("zero data rows")
    if outcome is not None and outcome not in header:
        raise DataError("missing outcome column")
    for name in schema:
        if name not in header:
            raise DataError(f"declared column {name!r} not in CSV header")

    columns = []
    for j, name in enumerate(header):
        kind = schema.get(name, CONTINUOUS)
        raw = [r[j].strip() if j < len(r) else "" for r in rows]
        if kind == CONTINUOUS:
            vals = np.empty(len(raw))
            for i, cell in enumerate(raw):
                if cell in MISSING_TOKENS:
                    vals[i] = np.nan
                else:
                    try:
                        vals[i] = float(cell)
                    except ValueError:
                        vals[i] = np.nan
            columns.append(Column(name, CONTINUOUS, vals))
        else:
            levels: list[str] = []
            seen: dict[str, int] = {}
            codes = np.empty(len(raw))
            for i, cell in enumerate(raw):
                if cell in MISSING_TOKENS:
                    codes[i] = -1
                    continue
                if cell not in seen:
                    seen[cell] = len(levels)
                    levels.append(cell)
                codes[i] = seen[cell]
            columns.append(Column(name, CATEGORICAL, codes, tuple(levels)))
    return Dataset(columns, outcome, task)


def drop_missing(d: Dataset) -> Dataset:
    """Remove every row with at least one missing cell, preserving order."""
    if d.n_rows == 0:
        raise DataError("empty dataset")
    bad = np.zeros(d.n_rows, dtype=bool)
    for c in d.columns:
        bad |= c.missing_mask()
    keep = np.flatnonzero(~bad)
    if keep.size == 0:
        raise DataError("all rows contain missing values")
    return d.subset(keep)


@dataclass
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int


def split_half(d: Dataset, seed: int) -> SplitPair:
    """Deterministic disjoint half split; train gets the extra row on odd n."""
    n = d.n_rows
    if n < 4:
        raise DataError("need at least 4 rows to split")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = (n + 1) // 2
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return SplitPair(d.subset(train_idx), d.subset(test_idx), seed)


def column_quantile(c: Column, q: float) -> float:
    """Type-7 (linear interpolation between order statistics) quantile."""
    if c.kind != CONTINUOUS:
        raise DataError("quantile of a categorical column")
    vals = np.sort(c.non_missing())
    if vals.size == 0:
        raise DataError(f"column {c.name!r} has no non-missing values")
    if not 0.0 <= q <= 1.0:
        raise DataError("quantile fraction outside [0, 1]")
    h = (vals.size - 1) * q
    lo = int(math.floor(h))
    hi = min(lo + 1, vals.size - 1)
    return float(vals[lo] + (h - lo) * (vals[hi] - vals[lo]))
