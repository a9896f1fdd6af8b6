"""CSV ingestion, grouped 0/1 binarization, reproducible splits and pair differences.

Feature columns are encoded into yes/no dummies grouped by source question:
numeric columns get tercile interval indicators, categorical columns get
top-3-by-frequency indicators plus an aggregate "other" bucket.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MISSING_TOKENS = {"", "na", "n/a", "nan", "none", "null", "?", "missing"}
MISSING_LABEL = "Missing"

NUMERIC = "numeric"
CATEGORICAL = "categorical"
BINARY = "binary"


class DataError(ValueError):
    """Raised for malformed input data, with row/column location where known."""


@dataclass(frozen=True)
class Column:
    """One source column: numeric/binary values are floats with NaN for missing,
    categorical values are strings with missing already mapped to ``Missing``."""

    name: str
    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL, BINARY):
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class RawTable:
    columns: tuple[Column, ...]
    labels: np.ndarray  # int8 in {-1, +1}

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)


def _is_missing(token: str) -> bool:
    return token.strip().lower() in MISSING_TOKENS


def load_csv(
    path,
    label_column: str,
    positive_label: str,
    excluded_columns: tuple[str, ...] = (),
    delimiter: str = ",",
) -> RawTable:
    """Read a headered CSV into a typed RawTable.

    A column is numeric when every non-missing entry parses as a number,
    binary when those numbers are all 0/1, and categorical otherwise.
    Rows whose label equals ``positive_label`` get +1, all others -1.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataError(
                f"{path}: label column {label_column!r} not found; columns: {header}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue  # skip blank lines
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append([f.strip() for f in row])
    if not rows:
        raise DataError(f"{path}: no data rows")

    label_idx = header.index(label_column)
    labels = np.array(
        [1 if row[label_idx] == positive_label else -1 for row in rows], dtype=np.int8
    )

    columns = []
    for j, name in enumerate(header):
        if j == label_idx or name in excluded_columns:
            continue
        raw = [row[j] for row in rows]
        columns.append(_type_column(name, raw))
    return RawTable(columns=tuple(columns), labels=labels)


def _type_column(name: str, raw: list[str]) -> Column:
    parsed = np.full(len(raw), np.nan)
    numeric = True
    for i, tok in enumerate(raw):
        if _is_missing(tok):
            continue
        try:
            parsed[i] = float(tok)
        except ValueError:
            numeric = False
            break
    if numeric:
        finite = parsed[~np.isnan(parsed)]
        kind = BINARY if finite.size and set(np.unique(finite)) <= {0.0, 1.0} else NUMERIC
        return Column(name=name, kind=kind, values=parsed)
    values = np.array(
        [MISSING_LABEL if _is_missing(tok) else tok for tok in raw], dtype=object
    )
    return Column(name=name, kind=CATEGORICAL, values=values)


# ---------------------------------------------------------------------------
# Binarization rules


@dataclass(frozen=True)
class ColumnRule:
    """Encoding rule for one source column.

    kind "tercile": interval dummies (<= t1, t1 < v <= t2, > t2); "cuts":
    one indicator v > b per boundary; "identity": the 0/1 column itself;
    "topk": indicators for up to three categories plus an optional "other"
    bucket; "drop": column carries no information and is skipped.
    """

    column: str
    kind: str
    thresholds: tuple[float, ...] = ()
    categories: tuple[str, ...] = ()
    keep_other: bool = False
    missing_dummy: bool = False

    def __post_init__(self):
        if self.kind == "tercile":
            t1, t2 = self.thresholds
            if not t1 < t2:
                raise DataError(f"{self.column}: tercile thresholds must increase")
        if self.kind == "topk" and not 1 <= len(self.categories) <= 3:
            raise DataError(f"{self.column}: topk takes 1..3 categories")


@dataclass(frozen=True)
class BinarizationSpec:
    rules: tuple[ColumnRule, ...]

    def rule(self, column: str) -> ColumnRule:
        for r in self.rules:
            if r.column == column:
                return r
        raise KeyError(column)


def _tercile_thresholds(values: np.ndarray) -> tuple[float, float]:
    """Thresholds at the empirical 1/3 and 2/3 quantiles, as midpoints between
    order statistics; a tie collapses the midpoint onto the shared value so the
    tied observations land in the lower interval."""
    v = np.sort(values)
    n = v.size
    k1 = n // 3
    k2 = (2 * n) // 3
    t1 = 0.5 * (v[k1 - 1] + v[k1])
    t2 = 0.5 * (v[k2 - 1] + v[k2])
    return float(t1), float(t2)


def infer_spec(table: RawTable, overrides: dict[str, ColumnRule] | None = None) -> BinarizationSpec:
    """Derive a BinarizationSpec from the data: terciles for numerics, top-3
    plus "other" for categoricals, identity for binary columns.

    ``overrides`` replaces the inferred rule for the named columns.
    """
    if table.n_rows == 0:
        raise DataError("cannot infer a binarization spec from an empty table")
    overrides = overrides or {}
    rules = []
    for col in table.columns:
        if col.name in overrides:
            rules.append(overrides[col.name])
            continue
        rules.append(_infer_rule(col))
    return BinarizationSpec(rules=tuple(rules))


def _infer_rule(col: Column) -> ColumnRule:
    if col.kind == BINARY:
        has_missing = bool(np.isnan(col.values).any())
        return ColumnRule(column=col.name, kind="identity", missing_dummy=has_missing)

    if col.kind == NUMERIC:
        finite = col.values[~np.isnan(col.values)]
        has_missing = finite.size < col.values.size
        distinct = np.unique(finite)
        if distinct.size == 0:
            warnings.warn(f"column {col.name!r} is entirely missing; dropped")
            return ColumnRule(column=col.name, kind="drop")
        if distinct.size == 1:
            warnings.warn(f"column {col.name!r} is constant; dropped")
            return ColumnRule(column=col.name, kind="drop")
        if distinct.size < 3:
            warnings.warn(
                f"column {col.name!r} has {distinct.size} distinct values; "
                "falling back to one dummy per value boundary"
            )
            cuts = tuple(
                float(0.5 * (distinct[i] + distinct[i + 1]))
                for i in range(distinct.size - 1)
            )
            return ColumnRule(
                column=col.name, kind="cuts", thresholds=cuts, missing_dummy=has_missing
            )
        t1, t2 = _tercile_thresholds(finite)
        if not t1 < t2:
            warnings.warn(
                f"column {col.name!r}: tercile thresholds collapse under ties; "
                "falling back to a single cut"
            )
            return ColumnRule(
                column=col.name, kind="cuts", thresholds=(t1,), missing_dummy=has_missing
            )
        return ColumnRule(
            column=col.name, kind="tercile", thresholds=(t1, t2), missing_dummy=has_missing
        )

    # categorical: rank levels by frequency, then name, for determinism
    levels, counts = np.unique(col.values.astype(str), return_counts=True)
    order = np.lexsort((levels, -counts))
    ranked = [str(levels[i]) for i in order]
    if len(ranked) == 1:
        warnings.warn(f"column {col.name!r} has a single level; dropped")
        return ColumnRule(column=col.name, kind="drop")
    if len(ranked) == 2:
        return ColumnRule(column=col.name, kind="topk", categories=(ranked[0],))
    top = tuple(ranked[:3])
    return ColumnRule(
        column=col.name, kind="topk", categories=top, keep_other=len(ranked) > 3
    )


# ---------------------------------------------------------------------------
# Binary dataset


@dataclass(frozen=True)
class BinaryDataset:
    """Immutable 0/1 design matrix with labels and question groups.

    ``groups[s]`` lists the column indices derived from source question ``s``;
    ``features[j]`` is the (question, response) text for column ``j``.
    """

    x: np.ndarray  # (n, p) uint8
    y: np.ndarray  # (n,) int8 in {-1, +1}
    groups: tuple[np.ndarray, ...]
    features: tuple[tuple[str, str], ...]

    def __post_init__(self):
        seen = np.concatenate([g for g in self.groups]) if self.groups else np.array([], int)
        if sorted(seen.tolist()) != list(range(self.p)):
            raise DataError("groups must partition the feature columns")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return len(self.groups)

    @property
    def n_pos(self) -> int:
        return int((self.y == 1).sum())

    @property
    def n_neg(self) -> int:
        return int((self.y == -1).sum())

    @property
    def group_of(self) -> np.ndarray:
        out = np.empty(self.p, dtype=np.int64)
        for s, g in enumerate(self.groups):
            out[g] = s
        return out

    def take(self, idx: np.ndarray) -> "BinaryDataset":
        return BinaryDataset(
            x=self.x[idx], y=self.y[idx], groups=self.groups, features=self.features
        )

    def to_json(self) -> str:
        doc = {
            "features": [list(f) for f in self.features],
            "groups": [g.tolist() for g in self.groups],
            "labels": self.y.tolist(),
            "rows": ["".join("1" if v else "0" for v in row) for row in self.x],
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "BinaryDataset":
        doc = json.loads(text)
        rows = doc["rows"]
        x = np.array([[1 if ch == "1" else 0 for ch in row] for row in rows], dtype=np.uint8)
        if x.size == 0:
            x = x.reshape(len(rows), len(doc["features"]))
        return BinaryDataset(
            x=x,
            y=np.asarray(doc["labels"], dtype=np.int8),
            groups=tuple(np.asarray(g, dtype=np.int64) for g in doc["groups"]),
            features=tuple((f[0], f[1]) for f in doc["features"]),
        )


def binarize(table: RawTable, spec: BinarizationSpec) -> BinaryDataset:
    """Apply a BinarizationSpec, producing one question group per kept column."""
    for col in table.columns:
        spec.rule(col.name)  # raises KeyError when the spec misses a column
    cols: list[np.ndarray] = []
    features: list[tuple[str, str]] = []
    groups: list[np.ndarray] = []
    for col in table.columns:
        rule = spec.rule(col.name)
        if rule.kind == "drop":
            continue
        start = len(cols)
        dummies, responses = _encode(col, rule)
        cols.extend(dummies)
        features.extend((col.name, r) for r in responses)
        groups.append(np.arange(start, len(cols), dtype=np.int64))
    if not cols:
        raise DataError("binarization produced no features")
    x = np.column_stack(cols).astype(np.uint8)
    return BinaryDataset(x=x, y=table.labels.copy(), groups=tuple(groups), features=tuple(features))


def _fmt(v: float) -> str:
    return f"{v:g}"


def _encode(col: Column, rule: ColumnRule) -> tuple[list[np.ndarray], list[str]]:
    dummies: list[np.ndarray] = []
    responses: list[str] = []
    if rule.kind == "identity":
        vals = col.values
        known = ~np.isnan(vals)
        dummies.append(np.where(known, vals == 1.0, False).astype(np.uint8))
        responses.append("yes")
    elif rule.kind == "tercile":
        t1, t2 = rule.thresholds
        v = col.values
        known = ~np.isnan(v)
        dummies.append((known & (v <= t1)).astype(np.uint8))
        dummies.append((known & (v > t1) & (v <= t2)).astype(np.uint8))
        dummies.append((known & (v > t2)).astype(np.uint8))
        responses.extend([f"<= {_fmt(t1)}", f"{_fmt(t1)} < v <= {_fmt(t2)}", f"> {_fmt(t2)}"])
    elif rule.kind == "cuts":
        v = col.values
        known = ~np.isnan(v)
        for b in rule.thresholds:
            dummies.append((known & (v > b)).astype(np.uint8))
            responses.append(f"> {_fmt(b)}")
    elif rule.kind == "topk":
        vals = col.values.astype(str)
        covered = np.zeros(len(vals), dtype=bool)
        for cat in rule.categories:
            hit = vals == cat
            covered |= hit
            dummies.append(hit.astype(np.uint8))
            responses.append(cat)
        if rule.keep_other:
            dummies.append((~covered).astype(np.uint8))
            responses.append("Other")
        elif not covered.all():
            bad = np.flatnonzero(~covered)[0]
            raise DataError(
                f"column {col.name!r}, row {bad}: value {vals[bad]!r} outside the "
                "categorical domain and the rule has no 'other' bucket"
            )
    else:
        raise DataError(f"unknown rule kind {rule.kind!r}")
    if rule.missing_dummy and rule.kind in ("identity", "tercile", "cuts"):
        miss = np.isnan(col.values)
        dummies.append(miss.astype(np.uint8))
        responses.append(MISSING_LABEL)
    return dummies, responses


# ---------------------------------------------------------------------------
# Splits, subsamples, pair differences


@dataclass(frozen=True)
class SplitPair:
    train: BinaryDataset
    test: BinaryDataset
    seed: int
    fraction: float


def split(data: BinaryDataset, fraction: float, seed: int) -> SplitPair:
    """Uniform row permutation then prefix split; pure in (data, fraction, seed)."""
    if not 0.0 < fraction < 1.0:
        raise DataError(f"split fraction must lie in (0, 1), got {fraction}")
    if data.n < 2:
        raise DataError("need at least two rows to split")
    n_train = int(round(fraction * data.n))
    if n_train == 0 or n_train == data.n:
        raise DataError(f"fraction {fraction} leaves an empty side for n={data.n}")
    perm = np.random.default_rng(seed).permutation(data.n)
    return SplitPair(
        train=data.take(perm[:n_train]),
        test=data.take(perm[n_train:]),
        seed=seed,
        fraction=fraction,
    )


def subsample(
    data: BinaryDataset, m: int, seed: int, stratified: bool = False, max_retries: int = 100
) -> BinaryDataset:
    """Draw m rows uniformly without replacement, redrawing (bounded) until both
    classes are present. ``stratified`` draws per class proportionally instead."""
    if m > data.n:
        raise DataError(f"subsample size {m} exceeds n={data.n}")
    if data.n_pos == 0 or data.n_neg == 0:
        raise DataError("source data is single-class; cannot subsample both classes")
    if m == data.n:
        return data
    rng = np.random.default_rng(seed)
    if stratified:
        m_pos = min(max(1, int(round(m * data.n_pos / data.n))), m - 1)
        pos = np.flatnonzero(data.y == 1)
        neg = np.flatnonzero(data.y == -1)
        take_pos = pos[rng.permutation(pos.size)[:m_pos]]
        take_neg = neg[rng.permutation(neg.size)[: m - m_pos]]
        idx = np.sort(np.concatenate([take_pos, take_neg]))
        return data.take(idx)
    for _ in range(max_retries):
        idx = rng.permutation(data.n)[:m]
        y = data.y[idx]
        if (y == 1).any() and (y == -1).any():
            return data.take(np.sort(idx))
    raise DataError(f"could not draw both classes in {max_retries} attempts")


@dataclass(frozen=True)
class PairDiffSet:
    """Deduplicated difference vectors d = x_neg - x_pos over all
    positive-negative pairs, with multiplicities as weights."""

    d: np.ndarray        # (k, p) int8, entries in {-1, 0, 1}
    weights: np.ndarray  # (k,) int64, sums to n_pos * n_neg
    n_pos: int
    n_neg: int

    @property
    def total(self) -> int:
        return self.n_pos * self.n_neg


def pair_differences(data: BinaryDataset) -> PairDiffSet:
    if data.n_pos == 0 or data.n_neg == 0:
        raise DataError("pair differences need at least one row of each class")
    xp = data.x[data.y == 1].astype(np.int8)
    xn = data.x[data.y == -1].astype(np.int8)
    up, cp = np.unique(xp, axis=0, return_counts=True)
    un, cn = np.unique(xn, axis=0, return_counts=True)
    diffs = (un[:, None, :] - up[None, :, :]).reshape(-1, data.p)
    wts = (cn[:, None] * cp[None, :]).reshape(-1)
    uniq, inverse = np.unique(diffs, axis=0, return_inverse=True)
    weights = np.zeros(uniq.shape[0], dtype=np.int64)
    np.add.at(weights, inverse.ravel(), wts)
    return PairDiffSet(d=uniq, weights=weights, n_pos=data.n_pos, n_neg=data.n_neg)
