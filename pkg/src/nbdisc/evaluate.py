"""Cross-validation pipelines, significance tests, and report emission.

Fold pipeline order: impute with training statistics; optionally tune k and
pseudo-label the unlabeled pool (unlabeled training rows in partial-label
mode, plus the test rows' features when transductive); derive the cut-point
scheme from labeled plus pseudo-labeled rows; apply it to both partitions;
fit the classifier on labeled training rows only; score the test rows.
True test labels are used for nothing but the final accuracy.

Accuracies are fractions in [0, 1]; reports format them as percentages.
The one-tailed paired t-test normalizes differences by the n-denominator
standard deviation over sqrt(n) and takes the p-value from the Student t
distribution with n-1 degrees of freedom.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .data import (
    Dataset,
    concat_rows,
    impute_missing,
    split_labeled_fraction,
    stratified_folds,
)
from .discretize import (
    DEFAULT_BINS,
    DEFAULT_N0,
    DiscretizationScheme,
    METHODS,
    apply_scheme,
    build_scheme,
    mutual_information,
)
from .pseudo import DEFAULT_K_GRID, KnnConfig, pseudo_label, select_k
from .weighted_nb import (
    TrainOptions,
    categorical_vocab,
    encode_discrete,
    fit_nb,
    identity_params,
    predict_batch,
    train_cawnb,
    train_rnb,
    train_wanbia,
)

CLASSIFIERS = ("nb", "wanbia", "cawnb", "rnb")

REPRODUCTION_CAVEATS = [
    "k-NN grid (odd 1..31) and z-score feature scaling are artifact choices",
    "weight-training objective, optimizer, and stopping rule are artifact choices",
    "std figures are the sample standard deviation over folds (n-1 denominator)",
]


class PipelineError(RuntimeError):
    """Failure inside a pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    """One benchmark configuration: discretizer, classifier, and protocol knobs."""

    method: str = "sadd"
    classifier: str = "nb"
    n0: int = DEFAULT_N0
    bins: int = DEFAULT_BINS
    pseudo_label: bool | None = None  # None: on iff method == "sadd"
    transductive: bool = True
    labeled_fraction: float = 1.0
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    max_iter: int = 500
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if not 0.0 < self.labeled_fraction <= 1.0:
            raise ValueError("labeled_fraction must be in (0, 1]")
        if self.pseudo_label and self.method in ("eqw", "eqf"):
            raise ValueError("pseudo-labeling requires a discretizer that consumes labels")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def uses_pseudo_labels(self) -> bool:
        if self.pseudo_label is None:
            return self.method == "sadd"
        return self.pseudo_label

    def label(self) -> str:
        tag = f"{self.method}+{self.classifier}"
        if self.labeled_fraction < 1.0:
            tag += f"@{self.labeled_fraction:g}"
        if not self.transductive:
            tag += ":inductive"
        if self.pseudo_label is not None and self.pseudo_label != (self.method == "sadd"):
            tag += ":pl" if self.pseudo_label else ":nopl"
        return tag


def _child_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


@dataclass
class FoldResult:
    accuracy: float
    selected_k: int | None
    predictions: list[str]


def _scheme_inputs(
    labeled: Dataset,
    pool: Dataset | None,
    config: PipelineConfig,
    k_seed: int,
) -> tuple[Dataset, np.ndarray, int | None]:
    """Data and labels feeding scheme derivation, pseudo-labeling the pool.

    With an empty pool this reduces to the plain supervised path, so the
    transductive and inductive pipelines coincide when nothing is unlabeled.
    """
    if pool is None or pool.n_rows == 0:
        return labeled, labeled.labels, None
    k = select_k(labeled, config.k_grid, k_seed)
    pseudo = pseudo_label(labeled, pool, KnnConfig(k))
    combined = concat_rows([labeled, pool])
    labels = np.concatenate([labeled.labels, pseudo])
    return combined, labels, k


def run_fold(
    data: Dataset,
    train_rows: Sequence[int] | np.ndarray,
    test_rows: Sequence[int] | np.ndarray,
    config: PipelineConfig,
    seed: int | None = None,
) -> FoldResult:
    """Run the full pipeline on one train/test split and score the test rows."""
    train_rows = np.asarray(train_rows, dtype=int)
    test_rows = np.asarray(test_rows, dtype=int)
    if np.intersect1d(train_rows, test_rows).size:
        raise PipelineError("setup", "train and test rows overlap")
    if train_rows.size == 0 or test_rows.size == 0:
        raise PipelineError("setup", "train and test rows must be non-empty")
    seed = config.seed if seed is None else seed

    stage = "impute"
    try:
        train = data.subset(train_rows)
        test = data.subset(test_rows)
        imp_train = impute_missing(train, train)
        imp_test = impute_missing(test, train)

        stage = "split"
        if config.labeled_fraction < 1.0:
            split = split_labeled_fraction(
                np.arange(imp_train.n_rows),
                imp_train.labels,
                config.labeled_fraction,
                _child_seed(seed, 1),
            )
            labeled = imp_train.subset(split.labeled_rows)
            unlabeled = imp_train.subset(split.unlabeled_rows)
        else:
            labeled = imp_train
            unlabeled = None

        stage = "pseudo-label"
        selected_k = None
        if config.uses_pseudo_labels:
            parts = []
            if unlabeled is not None and unlabeled.n_rows:
                parts.append(unlabeled)
            if config.transductive:
                parts.append(imp_test)
            pool = concat_rows(parts) if parts else None
            scheme_data, scheme_labels, selected_k = _scheme_inputs(
                labeled, pool, config, _child_seed(seed, 2)
            )
        elif config.method in ("eqw", "eqf"):
            scheme_data, scheme_labels = imp_train, imp_train.labels
        else:
            scheme_data, scheme_labels = labeled, labeled.labels

        stage = "discretize"
        scheme = build_scheme(
            scheme_data, scheme_labels, config.method, n0=config.n0, bins=config.bins
        )
        vocab = categorical_vocab([imp_train, imp_test])
        table_train = encode_discrete(apply_scheme(scheme, labeled), scheme, vocab)
        table_test = encode_discrete(apply_scheme(scheme, imp_test), scheme, vocab)

        stage = "fit"
        model = fit_nb(table_train, labeled.labels)
        opts = TrainOptions(max_iter=config.max_iter, tol=config.tol)
        if config.classifier == "nb":
            params = identity_params(model)
        elif config.classifier == "wanbia":
            params = train_wanbia(table_train, labeled.labels, opts, model=model).params
        elif config.classifier == "cawnb":
            params = train_cawnb(table_train, labeled.labels, opts, model=model).params
        else:
            params = train_rnb(table_train, labeled.labels, opts, model=model).params

        stage = "predict"
        predictions = predict_batch(model, params, table_test.x)
        accuracy = float(np.mean(predictions == test.labels))
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(stage, str(exc)) from exc

    return FoldResult(
        accuracy=accuracy, selected_k=selected_k, predictions=predictions.tolist()
    )


@dataclass
class AttributeDiagnostic:
    name: str
    intervals: int
    mi: float


@dataclass
class DiagnosticsTable:
    rows: list[AttributeDiagnostic]

    @property
    def avg_intervals(self) -> float:
        return float(np.mean([r.intervals for r in self.rows])) if self.rows else float("nan")

    @property
    def avg_mi(self) -> float:
        return float(np.mean([r.mi for r in self.rows])) if self.rows else float("nan")


def diagnostics_table(
    scheme: DiscretizationScheme, disc_data: Dataset, labels: Sequence[str] | np.ndarray
) -> DiagnosticsTable:
    """Interval count and attribute/class mutual information per numeric attribute."""
    labels = np.asarray(labels, dtype=object)
    rows = []
    for j in disc_data.numeric_attrs():
        rows.append(
            AttributeDiagnostic(
                name=disc_data.names[j],
                intervals=scheme.n_intervals(j),
                mi=mutual_information(disc_data.columns[j].astype(int), labels),
            )
        )
    return DiagnosticsTable(rows=rows)


@dataclass
class EvalReport:
    """Per-fold accuracies plus dataset-level discretization diagnostics."""

    dataset: str
    config: PipelineConfig
    fold_accuracies: list[float]
    selected_k: list[int | None] = field(default_factory=list)
    diagnostics: DiagnosticsTable | None = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        if len(self.fold_accuracies) < 2:
            return 0.0
        return float(np.std(self.fold_accuracies, ddof=1))


def cross_validate(
    data: Dataset,
    config: PipelineConfig,
    folds: int = 10,
    dataset_name: str = "",
    with_diagnostics: bool = True,
) -> EvalReport:
    """Stratified k-fold evaluation of one configuration."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    plan = stratified_folds(data, folds, config.seed)
    accuracies = []
    ks = []
    for fold in range(folds):
        result = run_fold(
            data,
            plan.train_rows(fold),
            plan.test_rows(fold),
            config,
            seed=_child_seed(config.seed, 7, fold),
        )
        accuracies.append(result.accuracy)
        ks.append(result.selected_k)

    diag = None
    if with_diagnostics:
        imputed = impute_missing(data, data)
        scheme = build_scheme(imputed, None, config.method, n0=config.n0, bins=config.bins)
        diag = diagnostics_table(scheme, apply_scheme(scheme, imputed), imputed.labels)

    return EvalReport(
        dataset=dataset_name,
        config=config,
        fold_accuracies=accuracies,
        selected_k=ks,
        diagnostics=diag,
    )


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    significant: bool


def paired_t_test_one_tailed(
    a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray
) -> TTestResult:
    """One-tailed paired t-test of H1: mean(a - b) > 0 at the 0.05 level.

    Degenerate cases by convention: all-zero differences give t = 0 (not
    significant); zero spread with a positive mean is significant.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    n = a.size
    if n < 2:
        raise ValueError("need at least 2 pairs")
    d = a - b
    if np.all(d == 0):
        return TTestResult(t=0.0, p=0.5, significant=False)
    mean = float(d.mean())
    spread = float(d.std(ddof=0))
    if spread == 0.0:
        if mean > 0:
            return TTestResult(t=math.inf, p=0.0, significant=True)
        return TTestResult(t=-math.inf, p=1.0, significant=False)
    t = mean / (spread / math.sqrt(n))
    p = float(stats.t.sf(t, n - 1))
    return TTestResult(t=t, p=p, significant=p < 0.05)


# --- report emission ----------------------------------------------------------


def config_to_dict(config: PipelineConfig) -> dict:
    doc = asdict(config)
    doc["k_grid"] = list(config.k_grid)
    return doc


def config_from_dict(doc: dict) -> PipelineConfig:
    doc = dict(doc)
    doc["k_grid"] = tuple(doc.get("k_grid", DEFAULT_K_GRID))
    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ValueError(f"unknown config fields: {unknown}")
    return PipelineConfig(**doc)


def config_hash(config: PipelineConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def report_to_dict(report: EvalReport) -> dict:
    diag = None
    if report.diagnostics is not None:
        diag = {
            "attributes": [
                {"name": r.name, "intervals": r.intervals, "mi": r.mi}
                for r in report.diagnostics.rows
            ],
            "avg_intervals": report.diagnostics.avg_intervals,
            "avg_mi": report.diagnostics.avg_mi,
        }
    return {
        "dataset": report.dataset,
        "config": config_to_dict(report.config),
        "config_hash": config_hash(report.config),
        "folds": len(report.fold_accuracies),
        "fold_accuracies": [float(v) for v in report.fold_accuracies],
        "mean": report.mean,
        "std": report.std,
        "selected_k": list(report.selected_k),
        "diagnostics": diag,
    }


def report_from_dict(doc: dict) -> EvalReport:
    diag = None
    if doc.get("diagnostics") is not None:
        diag = DiagnosticsTable(
            rows=[
                AttributeDiagnostic(name=r["name"], intervals=int(r["intervals"]), mi=float(r["mi"]))
                for r in doc["diagnostics"]["attributes"]
            ]
        )
    return EvalReport(
        dataset=doc["dataset"],
        config=config_from_dict(doc["config"]),
        fold_accuracies=[float(v) for v in doc["fold_accuracies"]],
        selected_k=[None if k is None else int(k) for k in doc["selected_k"]],
        diagnostics=diag,
    )


def results_document(reports: Sequence[EvalReport], seed: int) -> dict:
    """Machine-readable results: per run, folds, stats, and t-tests vs the
    first configuration of the same dataset (the candidate)."""
    runs = []
    first_by_dataset: dict[str, EvalReport] = {}
    for report in reports:
        entry = report_to_dict(report)
        candidate = first_by_dataset.get(report.dataset)
        if candidate is None:
            first_by_dataset[report.dataset] = report
            entry["vs_first"] = None
        else:
            test = paired_t_test_one_tailed(candidate.fold_accuracies, report.fold_accuracies)
            entry["vs_first"] = {
                "candidate_hash": config_hash(candidate.config),
                "t": test.t,
                "p": test.p,
                "candidate_significantly_better": test.significant,
            }
        runs.append(entry)
    return {
        "format": "nbdisc-results-v1",
        "seed": seed,
        "caveats": REPRODUCTION_CAVEATS,
        "runs": runs,
    }


def emit_report(
    reports: Sequence[EvalReport], path: str | Path, seed: int, format: str = "json"
) -> None:
    """Write results to ``path``: machine-readable JSON or the aligned table."""
    if format == "json":
        Path(path).write_text(
            json.dumps(results_document(reports, seed), indent=2, sort_keys=True) + "\n"
        )
    elif format == "table":
        seen: list[PipelineConfig] = []
        for r in reports:
            if r.config not in seen:
                seen.append(r.config)
        header = [f"# seed: {seed}"]
        header += [f"# config {config_hash(c)}: {c.label()}" for c in seen]
        Path(path).write_text("\n".join(header) + "\n" + format_comparison_table(reports) + "\n")
    else:
        raise ValueError(f"unknown report format {format!r}")


def load_results(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def format_comparison_table(reports: Sequence[EvalReport]) -> str:
    """Aligned accuracy table; a bullet marks configurations the first
    (candidate) configuration significantly outperforms."""
    datasets: list[str] = []
    configs: list[PipelineConfig] = []
    for r in reports:
        if r.dataset not in datasets:
            datasets.append(r.dataset)
        if r.config not in configs:
            configs.append(r.config)
    by_key = {(r.dataset, r.config): r for r in reports}

    header = ["dataset"] + [c.label() for c in configs]
    lines = []
    for ds in datasets:
        row = [ds]
        candidate = by_key.get((ds, configs[0]))
        for c in configs:
            report = by_key.get((ds, c))
            if report is None:
                row.append("-")
                continue
            cell = f"{100 * report.mean:.2f}±{100 * report.std:.2f}"
            if candidate is not None and c != configs[0]:
                test = paired_t_test_one_tailed(
                    candidate.fold_accuracies, report.fold_accuracies
                )
                if test.significant:
                    cell += " •"
            row.append(cell)
        lines.append(row)

    widths = [max(len(line[i]) for line in [header] + lines) for i in range(len(header))]
    rendered = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip()
                for line in [header] + lines]
    return "\n".join(rendered)
