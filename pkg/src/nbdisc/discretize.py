"""Supervised and unsupervised cut-point discretization.

Entropy-based top-down splitting: at each node the cut with maximal
information gain over all distinct observed values is chosen (partition
``{x < d}`` / ``{x >= d}``), and the split is accepted while the gain
exceeds a coding-cost threshold.  Two acceptance rules are provided:

  - ``mdlp``: gain > log2(N-1)/N + delta/N, with
    delta = log2(3^k - 2) - [k*E(S) - k1*E(S1) - k2*E(S2)];
  - ``sadd``: the same threshold scaled by sigmoid(N / N0), which keeps
    splitting small nodes where the plain rule stops early.  The sigmoid
    factor lies in (0.5, 1), so the scaled threshold never drops below
    half of the plain one.

Unsupervised baselines: equal-width and equal-frequency binning.
Entropies are in bits throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import AttributeKind, Dataset

METHODS = ("mdlp", "sadd", "eqw", "eqf")
DEFAULT_N0 = 2000
DEFAULT_BINS = 10


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass(eq=False)
class ClassCounts:
    """Per-class sample counts for one node of the splitting recursion."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_labels(cls, labels: Sequence[str], classes: Sequence[str] | None = None) -> "ClassCounts":
        arr = np.asarray(labels, dtype=object)
        if classes is None:
            classes = sorted(set(arr.tolist()))
        counts = np.array([(arr == c).sum() for c in classes], dtype=np.int64)
        return cls(counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def k(self) -> int:
        return int((self.counts > 0).sum())


@dataclass(eq=False)
class CutCandidate:
    """A cut value together with the class counts on each side."""

    value: float
    left: ClassCounts
    right: ClassCounts

    def __post_init__(self) -> None:
        if self.left.n < 1 or self.right.n < 1:
            raise ValueError("both sides of a cut must be non-empty")


def class_entropy(counts: ClassCounts) -> float:
    """Entropy of the class distribution, in bits; 0*log(0) counts as 0."""
    if counts.n < 1:
        raise ValueError("entropy of an empty set is undefined")
    positive = counts.counts[counts.counts > 0]
    p = positive / counts.n
    return float(-(p * np.log2(p)).sum())


def information_gain(parent: ClassCounts, cand: CutCandidate) -> float:
    """Entropy reduction of splitting ``parent`` at the candidate cut."""
    if not np.array_equal(parent.counts, cand.left.counts + cand.right.counts):
        raise ValueError("candidate counts inconsistent with parent")
    n = parent.n
    gain = (
        class_entropy(parent)
        - cand.left.n / n * class_entropy(cand.left)
        - cand.right.n / n * class_entropy(cand.right)
    )
    return max(gain, 0.0)


def mdlp_threshold(parent: ClassCounts, cand: CutCandidate) -> float:
    """Minimum gain required to accept a split of ``parent`` at ``cand``."""
    n = parent.n
    if n < 2:
        raise ValueError("threshold undefined for fewer than 2 samples")
    k = parent.k
    delta = math.log2(3**k - 2) - (
        k * class_entropy(parent)
        - cand.left.k * class_entropy(cand.left)
        - cand.right.k * class_entropy(cand.right)
    )
    return math.log2(n - 1) / n + delta / n


def sadd_threshold(theta: float, n: int, n0: int) -> float:
    """Scale a split threshold by sigmoid(n/n0); the factor is in (0.5, 1)."""
    if n < 1 or n0 < 1:
        raise ValueError("n and n0 must be at least 1")
    return sigmoid(n / n0) * theta


# --- vectorized splitting engine -------------------------------------------
#
# Values are sorted once per attribute; nodes are index ranges [lo, hi) into
# the sorted order.  A prefix-count matrix makes per-node class counts O(k)
# and keeps the whole recursion near O(n log n) for balanced splits.


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    counts = counts.astype(float)
    total = counts.sum(axis=1, keepdims=True)
    p = np.divide(counts, total, out=np.zeros_like(counts), where=total > 0)
    logp = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logp).sum(axis=1)


def _prefix_counts(codes: np.ndarray, n_classes: int) -> np.ndarray:
    onehot = np.zeros((len(codes), n_classes), dtype=np.int64)
    onehot[np.arange(len(codes)), codes] = 1
    prefix = np.zeros((len(codes) + 1, n_classes), dtype=np.int64)
    np.cumsum(onehot, axis=0, out=prefix[1:])
    return prefix


def _best_split(
    values: np.ndarray, prefix: np.ndarray, lo: int, hi: int
) -> tuple[int, float] | None:
    """Best cut position in [lo, hi); ties go to the smallest cut value."""
    seg = values[lo:hi]
    positions = np.flatnonzero(seg[1:] != seg[:-1]) + lo + 1
    if positions.size == 0:
        return None
    parent = prefix[hi] - prefix[lo]
    left = prefix[positions] - prefix[lo]
    right = parent - left
    n = hi - lo
    n_left = positions - lo
    gains = (
        _entropy_rows(parent[None, :])[0]
        - n_left / n * _entropy_rows(left)
        - (n - n_left) / n * _entropy_rows(right)
    )
    # first candidate within rounding noise of the max: ties go to smallest d
    best = int(np.argmax(gains >= gains.max() - 1e-12))
    return int(positions[best]), float(max(gains[best], 0.0))


def _split_threshold(prefix: np.ndarray, lo: int, hi: int, pos: int) -> float:
    parent = prefix[hi] - prefix[lo]
    left = prefix[pos] - prefix[lo]
    right = parent - left
    k = int((parent > 0).sum())
    n = hi - lo
    delta = math.log2(3**k - 2) - (
        k * _entropy_rows(parent[None, :])[0]
        - int((left > 0).sum()) * _entropy_rows(left[None, :])[0]
        - int((right > 0).sum()) * _entropy_rows(right[None, :])[0]
    )
    return math.log2(n - 1) / n + delta / n


def _partition(values: np.ndarray, labels: np.ndarray, n0: int | None) -> list[float]:
    """Recursive top-down splitting; ``n0 is None`` uses the plain threshold."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot partition an empty attribute")
    if np.isnan(values).any():
        raise ValueError("attribute has missing values; impute first")
    _, codes = np.unique(np.asarray(labels, dtype=object), return_inverse=True)
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    prefix = _prefix_counts(codes[order], int(codes.max()) + 1)

    cuts: list[float] = []
    stack = [(0, len(values))]
    while stack:
        lo, hi = stack.pop()
        if hi - lo <= 1:
            continue
        found = _best_split(sorted_values, prefix, lo, hi)
        if found is None:
            continue
        pos, gain = found
        theta = _split_threshold(prefix, lo, hi, pos)
        if n0 is not None:
            theta = sigmoid((hi - lo) / n0) * theta
        if gain > theta:
            cuts.append(float(sorted_values[pos]))
            stack.append((lo, pos))
            stack.append((pos, hi))
    return sorted(cuts)


def best_cut(values: Sequence[float] | np.ndarray, labels: Sequence[str]) -> CutCandidate | None:
    """Highest-gain cut over distinct observed values of a sorted attribute.

    Returns None when fewer than two distinct values exist.  Gain ties break
    toward the smallest cut value.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty input")
    if values.size != len(labels):
        raise ValueError("values and labels must align")
    if np.isnan(values).any():
        raise ValueError("attribute has missing values; impute first")
    if np.any(np.diff(values) < 0):
        raise ValueError("values must be sorted ascending")
    _, codes = np.unique(np.asarray(labels, dtype=object), return_inverse=True)
    prefix = _prefix_counts(codes, int(codes.max()) + 1)
    found = _best_split(values, prefix, 0, len(values))
    if found is None:
        return None
    pos, _ = found
    return CutCandidate(
        value=float(values[pos]),
        left=ClassCounts(prefix[pos]),
        right=ClassCounts(prefix[len(values)] - prefix[pos]),
    )


def mdlp_partition(values: Sequence[float] | np.ndarray, labels: Sequence[str]) -> list[float]:
    """Cut list from recursive splitting under the plain coding-cost rule."""
    return _partition(np.asarray(values, dtype=float), np.asarray(labels, dtype=object), None)


def sadd_partition(
    values: Sequence[float] | np.ndarray, labels: Sequence[str], n0: int = DEFAULT_N0
) -> list[float]:
    """Cut list from recursive splitting under the sigmoid-scaled rule."""
    if n0 < 1:
        raise ValueError("n0 must be at least 1")
    return _partition(np.asarray(values, dtype=float), np.asarray(labels, dtype=object), n0)


def equal_width(values: Sequence[float] | np.ndarray, bins: int) -> list[float]:
    """bins-1 cuts evenly spaced over [min, max]; empty if the column is constant."""
    if bins < 1:
        raise ValueError("bins must be at least 1")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty input")
    if np.isnan(values).any():
        raise ValueError("attribute has missing values; impute first")
    vmin, vmax = float(values.min()), float(values.max())
    if vmin == vmax:
        return []
    cuts = vmin + (vmax - vmin) * np.arange(1, bins) / bins
    return np.unique(cuts).tolist()


def equal_frequency(values: Sequence[float] | np.ndarray, bins: int) -> list[float]:
    """Cuts at the ceil(i*n/bins)-th order statistics, deduplicated.

    Each cut sits at the midpoint between the order statistic and the next
    distinct value, so it is strictly between attainable values.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    values = np.sort(np.asarray(values, dtype=float))
    if values.size == 0:
        raise ValueError("empty input")
    if np.isnan(values).any():
        raise ValueError("attribute has missing values; impute first")
    distinct = np.unique(values)
    n = values.size
    cuts: set[float] = set()
    for i in range(1, bins):
        pos = -(-i * n // bins)  # ceil(i*n/bins), 1-indexed order statistic
        x = values[pos - 1]
        nxt = np.searchsorted(distinct, x, side="right")
        if nxt < distinct.size:
            cuts.add(float((x + distinct[nxt]) / 2.0))
    return sorted(cuts)


@dataclass
class DiscretizationScheme:
    """Per-attribute sorted cut lists; categorical attributes carry no cuts."""

    method: str
    params: dict[str, int]
    names: list[str]
    kinds: list[AttributeKind]
    cuts: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.cuts) != len(self.names):
            raise ValueError("one cut list per attribute required")
        self.cuts = [np.asarray(c, dtype=float) for c in self.cuts]
        for name, c in zip(self.names, self.cuts):
            if c.size > 1 and not (np.diff(c) > 0).all():
                raise ValueError(f"cuts for {name!r} are not strictly increasing")

    def n_intervals(self, attr: int) -> int:
        return len(self.cuts[attr]) + 1


def build_scheme(
    data: Dataset,
    labels: Sequence[str] | np.ndarray | None,
    method: str,
    *,
    n0: int = DEFAULT_N0,
    bins: int = DEFAULT_BINS,
) -> DiscretizationScheme:
    """Run the chosen partitioner on every numeric attribute of ``data``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    label_arr = data.labels if labels is None else np.asarray(labels, dtype=object)
    if len(label_arr) != data.n_rows:
        raise ValueError("labels must align with rows")
    cuts: list[np.ndarray] = []
    for j, kind in enumerate(data.kinds):
        if kind is not AttributeKind.NUMERIC:
            cuts.append(np.empty(0))
            continue
        if data.missing[:, j].any():
            raise ValueError(f"attribute {data.names[j]!r} has missing values; impute first")
        col = data.columns[j]
        if method == "mdlp":
            cuts.append(np.asarray(mdlp_partition(col, label_arr)))
        elif method == "sadd":
            cuts.append(np.asarray(sadd_partition(col, label_arr, n0)))
        elif method == "eqw":
            cuts.append(np.asarray(equal_width(col, bins)))
        else:
            cuts.append(np.asarray(equal_frequency(col, bins)))
    if method == "sadd":
        params = {"n0": n0}
    elif method in ("eqw", "eqf"):
        params = {"bins": bins}
    else:
        params = {}
    return DiscretizationScheme(
        method=method, params=params, names=list(data.names), kinds=list(data.kinds), cuts=cuts
    )


def apply_scheme(scheme: DiscretizationScheme, data: Dataset) -> Dataset:
    """Map numeric values to interval indices: index = count of cuts <= x.

    Out-of-range values clamp into the end intervals by the same rule;
    categorical columns pass through unchanged.
    """
    if scheme.names != data.names or scheme.kinds != data.kinds:
        raise ValueError("scheme does not match the dataset attributes")
    columns: list[np.ndarray] = []
    for j, kind in enumerate(data.kinds):
        if kind is AttributeKind.NUMERIC:
            if data.missing[:, j].any():
                raise ValueError(f"attribute {data.names[j]!r} has missing values; impute first")
            idx = np.searchsorted(scheme.cuts[j], data.columns[j], side="right")
            columns.append(idx.astype(float))
        else:
            columns.append(data.columns[j].copy())
    return Dataset(
        names=list(data.names),
        kinds=list(data.kinds),
        columns=columns,
        missing=data.missing.copy(),
        labels=data.labels.copy(),
    )


def mutual_information(
    interval_indices: Sequence[int] | np.ndarray, labels: Sequence[str] | np.ndarray
) -> float:
    """Empirical mutual information (bits) between an attribute and the class."""
    x = np.asarray(interval_indices)
    y = np.asarray(labels, dtype=object)
    if x.size == 0:
        raise ValueError("empty input")
    if x.size != y.size:
        raise ValueError("indices and labels must align")
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    joint = np.zeros((int(xi.max()) + 1, int(yi.max()) + 1))
    np.add.at(joint, (xi, yi), 1.0)
    joint /= x.size
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    return float((joint[mask] * np.log2(joint[mask] / (px @ py)[mask])).sum())


@dataclass(frozen=True)
class ThresholdCurveRow:
    n: int
    raw: float
    scaled: tuple[float, ...]


def threshold_curve(n_values: Iterable[int], n0_list: Sequence[int]) -> list[ThresholdCurveRow]:
    """Tabulate log2(n-1)/n and its sigmoid-scaled versions for plotting."""
    rows = []
    for n in n_values:
        if n < 2:
            raise ValueError("n must be at least 2")
        raw = math.log2(n - 1) / n
        rows.append(
            ThresholdCurveRow(
                n=int(n), raw=raw, scaled=tuple(sigmoid(n / n0) * raw for n0 in n0_list)
            )
        )
    return rows


def scheme_to_dict(scheme: DiscretizationScheme) -> dict:
    return {
        "method": scheme.method,
        "params": dict(scheme.params),
        "attributes": [
            {"name": name, "kind": kind.value, "cuts": [float(c) for c in cuts]}
            for name, kind, cuts in zip(scheme.names, scheme.kinds, scheme.cuts)
        ],
    }


def scheme_from_dict(doc: dict) -> DiscretizationScheme:
    attrs = doc["attributes"]
    return DiscretizationScheme(
        method=doc["method"],
        params={k: int(v) for k, v in doc["params"].items()},
        names=[a["name"] for a in attrs],
        kinds=[AttributeKind(a["kind"]) for a in attrs],
        cuts=[np.asarray(a["cuts"], dtype=float) for a in attrs],
    )


def save_scheme(scheme: DiscretizationScheme, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scheme_to_dict(scheme), indent=2, sort_keys=True) + "\n")


def load_scheme(path: str | Path) -> DiscretizationScheme:
    return scheme_from_dict(json.loads(Path(path).read_text()))
