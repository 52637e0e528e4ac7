"""Tabular datasets with mixed numeric/categorical attributes.

Conventions:
  - CSV files carry a header row; the class column is the last column.
  - Missing cells are marked with a single token (default ``"?"``).
  - Attribute kinds are inferred (a column is numeric iff every non-missing
    cell parses as a finite real) unless a schema sidecar overrides them.
  - Imputation statistics come from a reference partition (normally the
    training fold) and are applied to both partitions.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

MISSING_TOKEN = "?"


class AttributeKind(Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


def _parse_finite(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


@dataclass
class Dataset:
    """Columnar table: attribute columns plus one class label per row.

    Numeric columns are float64 (NaN in missing cells); categorical columns
    are object arrays of tokens. ``missing`` is a (rows, attrs) bool mask.
    """

    names: list[str]
    kinds: list[AttributeKind]
    columns: list[np.ndarray]
    missing: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        n_attrs = len(self.names)
        if not (len(self.kinds) == len(self.columns) == n_attrs):
            raise ValueError("schema, kinds and columns must align")
        n_rows = len(self.labels)
        for name, col in zip(self.names, self.columns):
            if len(col) != n_rows:
                raise ValueError(f"column {name!r} has {len(col)} rows, expected {n_rows}")
        if self.missing.shape != (n_rows, n_attrs):
            raise ValueError("missing mask shape mismatch")

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def n_attrs(self) -> int:
        return len(self.names)

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels.tolist()))

    def numeric_attrs(self) -> list[int]:
        return [j for j, k in enumerate(self.kinds) if k is AttributeKind.NUMERIC]

    def categorical_attrs(self) -> list[int]:
        return [j for j, k in enumerate(self.kinds) if k is AttributeKind.CATEGORICAL]

    def subset(self, rows: Sequence[int] | np.ndarray) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            names=list(self.names),
            kinds=list(self.kinds),
            columns=[col[rows] for col in self.columns],
            missing=self.missing[rows],
            labels=self.labels[rows],
        )


def concat_rows(parts: Sequence[Dataset]) -> Dataset:
    """Stack datasets sharing one schema into a single row-wise table."""
    if not parts:
        raise ValueError("nothing to concatenate")
    first = parts[0]
    for other in parts[1:]:
        if other.names != first.names or other.kinds != first.kinds:
            raise ValueError("schema mismatch between datasets")
    return Dataset(
        names=list(first.names),
        kinds=list(first.kinds),
        columns=[
            np.concatenate([p.columns[j] for p in parts]) for j in range(first.n_attrs)
        ],
        missing=np.concatenate([p.missing for p in parts], axis=0),
        labels=np.concatenate([p.labels for p in parts]),
    )


def load_schema(path: str | Path) -> dict[str, AttributeKind]:
    """Read a sidecar schema file with one ``name,kind`` line per column."""
    hints: dict[str, AttributeKind] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        name, _, kind = line.partition(",")
        kind = kind.strip().lower()
        if kind not in ("numeric", "categorical"):
            raise ValueError(f"{path}:{lineno}: unknown kind {kind!r}")
        hints[name.strip()] = AttributeKind(kind)
    return hints


def load_csv(
    path: str | Path,
    schema_hint: Mapping[str, AttributeKind] | None = None,
    missing_token: str = MISSING_TOKEN,
) -> Dataset:
    """Load a headered CSV whose last column holds the class labels."""
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    records = rows[1:]
    if len(header) < 2:
        raise ValueError(f"{path}: need at least one attribute column plus the class column")
    if not records:
        raise ValueError(f"{path}: no data rows")
    for i, record in enumerate(records, start=2):
        if len(record) != len(header):
            raise ValueError(f"{path}: row {i} has {len(record)} cells, expected {len(header)}")

    names = header[:-1]
    labels = [record[-1] for record in records]
    if any(token == missing_token for token in labels):
        raise ValueError(f"{path}: missing class label")

    columns: list[np.ndarray] = []
    kinds: list[AttributeKind] = []
    missing = np.zeros((len(records), len(names)), dtype=bool)
    for j, name in enumerate(names):
        cells = [record[j] for record in records]
        miss = np.array([cell == missing_token for cell in cells], dtype=bool)
        present = [cell for cell, m in zip(cells, miss) if not m]
        hinted = schema_hint.get(name) if schema_hint else None
        if hinted is AttributeKind.NUMERIC:
            kind = AttributeKind.NUMERIC
        elif hinted is AttributeKind.CATEGORICAL:
            kind = AttributeKind.CATEGORICAL
        else:
            kind = (
                AttributeKind.NUMERIC
                if present and all(_parse_finite(cell) is not None for cell in present)
                else AttributeKind.CATEGORICAL
            )
        if kind is AttributeKind.NUMERIC:
            values = np.full(len(cells), np.nan)
            for i, (cell, m) in enumerate(zip(cells, miss)):
                if m:
                    continue
                parsed = _parse_finite(cell)
                if parsed is None:
                    raise ValueError(
                        f"{path}: column {name!r}, row {i + 2}: unparseable numeric cell {cell!r}"
                    )
                values[i] = parsed
            columns.append(values)
        else:
            tokens = np.array(
                [missing_token if m else cell for cell, m in zip(cells, miss)], dtype=object
            )
            columns.append(tokens)
        kinds.append(kind)
        missing[:, j] = miss

    return Dataset(
        names=names,
        kinds=kinds,
        columns=columns,
        missing=missing,
        labels=np.array(labels, dtype=object),
    )


def write_csv(data: Dataset, path: str | Path, missing_token: str = MISSING_TOKEN) -> None:
    """Write a dataset back to CSV; numeric cells use full round-trip precision."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(data.names + ["class"])
        for i in range(data.n_rows):
            record = []
            for j in range(data.n_attrs):
                if data.missing[i, j]:
                    record.append(missing_token)
                elif data.kinds[j] is AttributeKind.NUMERIC:
                    record.append(repr(float(data.columns[j][i])))
                else:
                    record.append(str(data.columns[j][i]))
            record.append(str(data.labels[i]))
            writer.writerow(record)


def impute_missing(data: Dataset, reference: Dataset) -> Dataset:
    """Fill missing cells with the reference column mean (numeric) or mode.

    Mode ties break toward the lexicographically smallest category. The
    reference is typically the training fold, so test rows never leak their
    own statistics.
    """
    if reference.names != data.names or reference.kinds != data.kinds:
        raise ValueError("reference schema mismatch")
    columns: list[np.ndarray] = []
    for j, kind in enumerate(data.kinds):
        col = data.columns[j]
        miss = data.missing[:, j]
        ref_present = ~reference.missing[:, j]
        if not ref_present.any():
            raise ValueError(f"column {data.names[j]!r} entirely missing in reference")
        if kind is AttributeKind.NUMERIC:
            fill = float(reference.columns[j][ref_present].mean())
            filled = col.copy()
            filled[miss] = fill
        else:
            counts = Counter(reference.columns[j][ref_present].tolist())
            top = max(counts.values())
            fill = min(tok for tok, c in counts.items() if c == top)
            filled = col.copy()
            filled[miss] = fill
        columns.append(filled)
    return Dataset(
        names=list(data.names),
        kinds=list(data.kinds),
        columns=columns,
        missing=np.zeros_like(data.missing),
        labels=data.labels.copy(),
    )


@dataclass(frozen=True)
class FoldPlan:
    """Row-to-fold assignments for stratified cross-validation."""

    assignments: np.ndarray
    folds: int
    seed: int

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def stratified_folds(data: Dataset, folds: int, seed: int) -> FoldPlan:
    """Assign rows to folds so per-class counts differ by at most one.

    Rows of each class are shuffled with the seed and dealt round-robin,
    which is simple and deterministic.
    """
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if folds > data.n_rows:
        raise ValueError(f"{folds} folds exceed {data.n_rows} rows")
    rng = np.random.default_rng(seed)
    assignments = np.full(data.n_rows, -1, dtype=int)
    for cls in data.classes:
        rows = np.flatnonzero(data.labels == cls)
        rows = rng.permutation(rows)
        assignments[rows] = np.arange(len(rows)) % folds
    return FoldPlan(assignments=assignments, folds=folds, seed=seed)


@dataclass(frozen=True)
class LabeledSplit:
    """Partition of training rows into labeled and unlabeled index sets."""

    labeled_rows: np.ndarray
    unlabeled_rows: np.ndarray
    fraction: float


def split_labeled_fraction(
    train_rows: Sequence[int] | np.ndarray,
    class_labels: Sequence[str] | np.ndarray,
    fraction: float,
    seed: int,
) -> LabeledSplit:
    """Pick ``round(fraction * n)`` labeled rows, stratified by class.

    Per-class quotas use the largest-remainder method so the labeled total
    is exact and class proportions are preserved as closely as possible.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    rows = np.asarray(train_rows, dtype=int)
    labels = np.asarray(class_labels, dtype=object)
    if len(rows) != len(labels):
        raise ValueError("train_rows and class_labels must align")
    n = len(rows)
    total = int(math.floor(fraction * n + 0.5))

    classes = sorted(set(labels.tolist()))
    class_rows = {cls: rows[np.flatnonzero(labels == cls)] for cls in classes}
    raw = {cls: total * len(class_rows[cls]) / n for cls in classes}
    quota = {cls: int(math.floor(raw[cls])) for cls in classes}
    leftover = total - sum(quota.values())
    order = sorted(classes, key=lambda cls: (-(raw[cls] - quota[cls]), cls))
    for cls in order[:leftover]:
        quota[cls] += 1

    rng = np.random.default_rng(seed)
    labeled_parts, unlabeled_parts = [], []
    for cls in classes:
        perm = rng.permutation(class_rows[cls])
        labeled_parts.append(perm[: quota[cls]])
        unlabeled_parts.append(perm[quota[cls] :])
    labeled = np.sort(np.concatenate(labeled_parts))
    unlabeled = np.sort(np.concatenate(unlabeled_parts))
    return LabeledSplit(labeled_rows=labeled, unlabeled_rows=unlabeled, fraction=fraction)
