"""Naive Bayes on discrete attributes, with trained attribute exponents.

The base model holds add-one-smoothed class priors and per-attribute
conditional tables.  Weighted variants raise conditional probabilities to
learned exponents before combining:

    score(c) = log prior(c) + sum_j e[c, j] * log cond(j, x_j | c)

Two posteriors are formed from softmax-normalized scores: one with a
class-specific exponent matrix W, one with a class-shared vector w.  The
final posterior blends them,

    P(c | x) = alpha * P_W(c | x) + (1 - alpha) * P_w(c | x),

and all of W, w and alpha (through a sigmoid reparameterization) are fit by
gradient descent with Armijo backtracking on the mean squared error between
the blended posterior and the one-hot label, so the objective never
increases.  Prediction takes the class with maximal posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import AttributeKind, Dataset
from .discretize import DiscretizationScheme


@dataclass
class DiscreteTable:
    """Integer-coded attribute matrix with per-attribute arity.

    Code -1 marks a categorical value outside the training vocabulary; the
    scoring path maps it to the smoothing-floor probability.
    """

    x: np.ndarray
    arity: tuple[int, ...]
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.int64)
        if self.x.ndim != 2 or self.x.shape[1] != len(self.arity):
            raise ValueError("matrix width must match arity list")

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]

    @property
    def n_attrs(self) -> int:
        return self.x.shape[1]


def categorical_vocab(datasets: Sequence[Dataset]) -> dict[int, list[str]]:
    """Sorted category vocabulary per categorical attribute, pooled over inputs."""
    first = datasets[0]
    vocab: dict[int, list[str]] = {}
    for j in first.categorical_attrs():
        tokens: set[str] = set()
        for ds in datasets:
            tokens.update(ds.columns[j].tolist())
        vocab[j] = sorted(tokens)
    return vocab


def encode_discrete(
    disc: Dataset, scheme: DiscretizationScheme, vocab: dict[int, list[str]]
) -> DiscreteTable:
    """Turn an interval-indexed dataset into an integer matrix with arities."""
    if disc.names != scheme.names:
        raise ValueError("dataset does not match the scheme")
    columns = []
    arity = []
    for j, kind in enumerate(disc.kinds):
        if kind is AttributeKind.NUMERIC:
            columns.append(disc.columns[j].astype(np.int64))
            arity.append(scheme.n_intervals(j))
        else:
            lookup = {tok: i for i, tok in enumerate(vocab[j])}
            columns.append(
                np.array([lookup.get(tok, -1) for tok in disc.columns[j]], dtype=np.int64)
            )
            arity.append(len(vocab[j]))
    return DiscreteTable(
        x=np.column_stack(columns) if columns else np.zeros((disc.n_rows, 0), dtype=np.int64),
        arity=tuple(arity),
        names=tuple(disc.names),
    )


@dataclass
class NbModel:
    """Smoothed class priors and per-attribute conditional tables."""

    classes: list[str]
    class_counts: np.ndarray
    priors: np.ndarray
    cond: list[np.ndarray]
    arity: tuple[int, ...]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_attrs(self) -> int:
        return len(self.cond)


@dataclass
class WeightedParams:
    """Class-specific exponents W, shared exponents w, blend coefficient alpha."""

    W: np.ndarray
    w: np.ndarray
    alpha: float

    def __post_init__(self) -> None:
        self.W = np.asarray(self.W, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not (np.isfinite(self.W).all() and np.isfinite(self.w).all()):
            raise ValueError("weights must be finite")


def identity_params(model: NbModel, alpha: float = 0.5) -> WeightedParams:
    return WeightedParams(
        W=np.ones((model.n_classes, model.n_attrs)),
        w=np.ones(model.n_attrs),
        alpha=alpha,
    )


def fit_nb(table: DiscreteTable, labels: Sequence[str] | np.ndarray) -> NbModel:
    """Count-based fit with add-one smoothing on priors and conditionals."""
    labels = np.asarray(labels, dtype=object)
    n = table.n_rows
    if n == 0:
        raise ValueError("empty training set")
    if len(labels) != n:
        raise ValueError("labels must align with rows")
    classes = sorted(set(labels.tolist()))
    codes = np.array([classes.index(t) for t in labels])
    class_counts = np.bincount(codes, minlength=len(classes)).astype(np.int64)
    priors = (class_counts + 1.0) / (n + len(classes))
    cond = []
    for j, a in enumerate(table.arity):
        col = table.x[:, j]
        if (col < 0).any() or (col >= a).any():
            raise ValueError(f"attribute {table.names[j]!r}: value index out of arity range")
        counts = np.zeros((len(classes), a))
        np.add.at(counts, (codes, col), 1.0)
        cond.append((counts + 1.0) / (class_counts[:, None] + a))
    return NbModel(
        classes=classes,
        class_counts=class_counts,
        priors=priors,
        cond=cond,
        arity=table.arity,
    )


# --- scoring ----------------------------------------------------------------


def _log_likelihoods(model: NbModel, x: np.ndarray) -> np.ndarray:
    """(n, C, m) tensor of log cond(j, x_ij | c); code -1 uses the smoothing floor."""
    x = np.asarray(x, dtype=np.int64)
    n, m = x.shape
    out = np.empty((n, model.n_classes, m))
    for j in range(m):
        col = x[:, j]
        if (col >= model.arity[j]).any() or (col < -1).any():
            raise ValueError(f"attribute {j}: value index out of arity range")
        table = np.log(model.cond[j])
        seen = col >= 0
        out[seen, :, j] = table[:, col[seen]].T
        if (~seen).any():
            floor = -np.log(model.class_counts + model.arity[j])
            out[~seen, :, j] = floor
    return out


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _posteriors(
    model: NbModel, params: WeightedParams, loglik: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    logprior = np.log(model.priors)
    s_class = logprior[None, :] + np.einsum("icj,cj->ic", loglik, params.W)
    s_shared = logprior[None, :] + np.einsum("icj,j->ic", loglik, params.w)
    p_class = _softmax(s_class)
    p_shared = _softmax(s_shared)
    return params.alpha * p_class + (1 - params.alpha) * p_shared, p_class, p_shared


def weighted_log_posterior(
    model: NbModel, exponents: np.ndarray, x: Sequence[int] | np.ndarray
) -> np.ndarray:
    """Per-class unnormalized log scores for one instance.

    ``exponents`` is a (classes, attrs) matrix; pass a broadcast row for
    class-shared weights.
    """
    x = np.asarray(x, dtype=np.int64)
    if (x < 0).any():
        raise ValueError("value index out of arity range")
    exponents = np.broadcast_to(np.asarray(exponents, dtype=float), (model.n_classes, model.n_attrs))
    loglik = _log_likelihoods(model, x[None, :])[0]
    return np.log(model.priors) + (exponents * loglik).sum(axis=1)


def posterior_blend(
    model: NbModel, params: WeightedParams, x: Sequence[int] | np.ndarray
) -> np.ndarray:
    """Blended per-class posterior for one instance; sums to 1."""
    x = np.asarray(x, dtype=np.int64)
    if (x < 0).any():
        raise ValueError("value index out of arity range")
    loglik = _log_likelihoods(model, x[None, :])
    blended, _, _ = _posteriors(model, params, loglik)
    return blended[0]


def posterior_batch(model: NbModel, params: WeightedParams, x: np.ndarray) -> np.ndarray:
    loglik = _log_likelihoods(model, x)
    blended, _, _ = _posteriors(model, params, loglik)
    return blended


def predict(model: NbModel, params: WeightedParams, x: Sequence[int] | np.ndarray) -> str:
    """Class with maximal posterior; ties break toward the smaller class index."""
    posterior = posterior_blend(model, params, x)
    return model.classes[int(np.argmax(posterior))]


def predict_batch(model: NbModel, params: WeightedParams, x: np.ndarray) -> np.ndarray:
    posterior = posterior_batch(model, params, x)
    return np.array([model.classes[i] for i in posterior.argmax(axis=1)], dtype=object)


# --- posterior-matching objective -------------------------------------------


def _onehot(codes: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(codes), n_classes))
    out[np.arange(len(codes)), codes] = 1.0
    return out


def _label_codes(model: NbModel, labels: Sequence[str] | np.ndarray) -> np.ndarray:
    return np.array([model.classes.index(t) for t in np.asarray(labels, dtype=object)])


def objective(
    model: NbModel,
    params: WeightedParams,
    x: np.ndarray,
    labels: Sequence[str] | np.ndarray,
) -> float:
    """Mean squared error between blended posteriors and one-hot labels."""
    if len(x) == 0:
        raise ValueError("empty data")
    loglik = _log_likelihoods(model, x)
    blended, _, _ = _posteriors(model, params, loglik)
    target = _onehot(_label_codes(model, labels), model.n_classes)
    return float(((blended - target) ** 2).sum(axis=1).mean())


def gradient(
    model: NbModel,
    params: WeightedParams,
    x: np.ndarray,
    labels: Sequence[str] | np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Analytic gradient of the objective w.r.t. (W, w, a) with alpha = s(a)."""
    loglik = _log_likelihoods(model, x)
    blended, p_class, p_shared = _posteriors(model, params, loglik)
    target = _onehot(_label_codes(model, labels), model.n_classes)
    residual = 2.0 * (blended - target) / len(x)

    row_dot = (residual * p_class).sum(axis=1, keepdims=True)
    t_class = p_class * (residual - row_dot)
    grad_W = params.alpha * np.einsum("ic,icj->cj", t_class, loglik)

    row_dot = (residual * p_shared).sum(axis=1, keepdims=True)
    t_shared = p_shared * (residual - row_dot)
    grad_w = (1 - params.alpha) * np.einsum("ic,icj->j", t_shared, loglik)

    grad_a = params.alpha * (1 - params.alpha) * float((residual * (p_class - p_shared)).sum())
    return grad_W, grad_w, grad_a


# --- training ----------------------------------------------------------------


@dataclass(frozen=True)
class TrainOptions:
    max_iter: int = 500
    tol: float = 1e-6
    armijo_c: float = 1e-4
    init_step: float = 1.0
    min_step: float = 1e-12


@dataclass
class TrainResult:
    params: WeightedParams
    objectives: list[float] = field(default_factory=list)


def _train(
    table: DiscreteTable,
    labels: Sequence[str] | np.ndarray,
    *,
    fit_w_class: bool,
    fit_w_shared: bool,
    fit_alpha: bool,
    alpha0: float,
    opts: TrainOptions,
    model: NbModel | None,
) -> TrainResult:
    model = fit_nb(table, labels) if model is None else model
    if model.n_classes < 2:
        raise ValueError("need at least 2 classes")
    loglik = _log_likelihoods(model, table.x)
    target = _onehot(_label_codes(model, labels), model.n_classes)

    def evaluate(W, w, alpha):
        blended, _, _ = _posteriors(model, WeightedParams(W, w, alpha), loglik)
        return float(((blended - target) ** 2).sum(axis=1).mean())

    W = np.ones((model.n_classes, model.n_attrs))
    w = np.ones(model.n_attrs)
    a = 0.0
    alpha = 1.0 / (1.0 + math.exp(-a)) if fit_alpha else alpha0

    value = evaluate(W, w, alpha)
    if not math.isfinite(value):
        raise RuntimeError("non-finite objective at initialization")
    trace = [value]

    for _ in range(opts.max_iter):
        grad_W, grad_w, grad_a = gradient(model, WeightedParams(W, w, alpha), table.x, labels)
        if not fit_w_class:
            grad_W = np.zeros_like(grad_W)
        if not fit_w_shared:
            grad_w = np.zeros_like(grad_w)
        if not fit_alpha:
            grad_a = 0.0
        grad_sq = float((grad_W**2).sum() + (grad_w**2).sum() + grad_a**2)
        if grad_sq == 0.0 or not math.isfinite(grad_sq):
            break

        step = opts.init_step
        accepted = None
        while step >= opts.min_step:
            W_new = W - step * grad_W
            w_new = w - step * grad_w
            a_new = a - step * grad_a
            alpha_new = 1.0 / (1.0 + math.exp(-a_new)) if fit_alpha else alpha0
            value_new = evaluate(W_new, w_new, alpha_new)
            if math.isfinite(value_new) and value_new <= value - opts.armijo_c * step * grad_sq:
                accepted = (W_new, w_new, a_new, alpha_new, value_new)
                break
            step /= 2.0
        if accepted is None:
            break
        W, w, a, alpha, value_new = accepted
        improvement = value - value_new
        value = value_new
        trace.append(value)
        if improvement < opts.tol:
            break

    return TrainResult(params=WeightedParams(W, w, alpha), objectives=trace)


def train_rnb(
    table: DiscreteTable,
    labels: Sequence[str] | np.ndarray,
    opts: TrainOptions | None = None,
    model: NbModel | None = None,
) -> TrainResult:
    """Fit W, w and the blend coefficient jointly."""
    return _train(
        table,
        labels,
        fit_w_class=True,
        fit_w_shared=True,
        fit_alpha=True,
        alpha0=0.5,
        opts=opts or TrainOptions(),
        model=model,
    )


def train_wanbia(
    table: DiscreteTable,
    labels: Sequence[str] | np.ndarray,
    opts: TrainOptions | None = None,
    model: NbModel | None = None,
) -> TrainResult:
    """Class-shared exponents only (alpha fixed at 0)."""
    return _train(
        table,
        labels,
        fit_w_class=False,
        fit_w_shared=True,
        fit_alpha=False,
        alpha0=0.0,
        opts=opts or TrainOptions(),
        model=model,
    )


def train_cawnb(
    table: DiscreteTable,
    labels: Sequence[str] | np.ndarray,
    opts: TrainOptions | None = None,
    model: NbModel | None = None,
) -> TrainResult:
    """Class-specific exponents only (alpha fixed at 1)."""
    return _train(
        table,
        labels,
        fit_w_class=True,
        fit_w_shared=False,
        fit_alpha=False,
        alpha0=1.0,
        opts=opts or TrainOptions(),
        model=model,
    )


# --- serialization -----------------------------------------------------------


def model_to_dict(model: NbModel, params: WeightedParams) -> dict:
    return {
        "classes": list(model.classes),
        "class_counts": [int(c) for c in model.class_counts],
        "priors": [float(p) for p in model.priors],
        "cond": [[[float(v) for v in row] for row in table] for table in model.cond],
        "arity": list(model.arity),
        "W": [[float(v) for v in row] for row in params.W],
        "w": [float(v) for v in params.w],
        "alpha": float(params.alpha),
    }


def model_from_dict(doc: dict) -> tuple[NbModel, WeightedParams]:
    model = NbModel(
        classes=list(doc["classes"]),
        class_counts=np.asarray(doc["class_counts"], dtype=np.int64),
        priors=np.asarray(doc["priors"], dtype=float),
        cond=[np.asarray(t, dtype=float) for t in doc["cond"]],
        arity=tuple(int(a) for a in doc["arity"]),
    )
    params = WeightedParams(
        W=np.asarray(doc["W"], dtype=float),
        w=np.asarray(doc["w"], dtype=float),
        alpha=float(doc["alpha"]),
    )
    return model, params
