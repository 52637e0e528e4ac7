"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np

from nbdisc.data import AttributeKind, Dataset


def make_dataset(columns, labels, kinds=None, missing=None):
    """Build a Dataset from plain lists.

    ``columns`` maps name -> list of cell values; kind is inferred from the
    first value unless ``kinds`` (name -> AttributeKind) overrides it.
    ``missing`` is an optional list of (row, attr) pairs.
    """
    names = list(columns)
    resolved = []
    arrays = []
    for name in names:
        cells = columns[name]
        if kinds and name in kinds:
            kind = kinds[name]
        else:
            kind = (
                AttributeKind.NUMERIC
                if isinstance(cells[0], (int, float))
                else AttributeKind.CATEGORICAL
            )
        resolved.append(kind)
        if kind is AttributeKind.NUMERIC:
            arrays.append(np.asarray(cells, dtype=float))
        else:
            arrays.append(np.asarray(cells, dtype=object))
    mask = np.zeros((len(labels), len(names)), dtype=bool)
    if missing:
        for row, attr in missing:
            mask[row, attr] = True
    return Dataset(
        names=names,
        kinds=resolved,
        columns=arrays,
        missing=mask,
        labels=np.asarray(labels, dtype=object),
    )


def entropy_bits(counts) -> float:
    """Direct evaluation of -sum p_i log2 p_i over positive counts."""
    total = sum(counts)
    return -sum(c / total * math.log2(c / total) for c in counts if c > 0)


def brute_force_best_cut(values, labels):
    """Exhaustive scan over all distinct-value cuts; returns (value, gain).

    Independent of the library: plain loops, entropy from ``entropy_bits``.
    """
    values = list(values)
    labels = list(labels)
    n = len(values)
    classes = sorted(set(labels))

    def counts(rows):
        return [sum(1 for i in rows if labels[i] == c) for c in classes]

    parent = entropy_bits(counts(range(n)))
    best = None
    for d in sorted(set(values)):
        left = [i for i in range(n) if values[i] < d]
        right = [i for i in range(n) if values[i] >= d]
        if not left or not right:
            continue
        gain = (
            parent
            - len(left) / n * entropy_bits(counts(left))
            - len(right) / n * entropy_bits(counts(right))
        )
        if best is None or gain > best[1] + 1e-12:
            best = (d, max(gain, 0.0))
    return best


def brute_force_nb_posterior(x_train, y_train, arity, query):
    """Count-and-multiply naive Bayes with add-one smoothing, no log space."""
    classes = sorted(set(y_train))
    n = len(y_train)
    joint = []
    for c in classes:
        rows = [i for i in range(n) if y_train[i] == c]
        p = (len(rows) + 1) / (n + len(classes))
        for j, a in enumerate(arity):
            matches = sum(1 for i in rows if x_train[i][j] == query[j])
            p *= (matches + 1) / (len(rows) + a)
        joint.append(p)
    total = sum(joint)
    return classes, [p / total for p in joint]


def brute_force_knn(ref, ref_labels, query, k):
    """Nearest-neighbor majority vote with the documented tie rules."""
    dist = [sum((a - b) ** 2 for a, b in zip(row, query)) for row in ref]
    order = sorted(range(len(ref)), key=lambda i: (dist[i], i))
    classes = sorted(set(ref_labels))
    votes = [0] * len(classes)
    for i in order[:k]:
        votes[classes.index(ref_labels[i])] += 1
    return classes[votes.index(max(votes))]
