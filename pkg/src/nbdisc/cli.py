"""Command-line interface.

Subcommands:
  discretize  build a cut-point scheme for one CSV and print diagnostics
  bench       run cross-validation benchmarks from a manifest or flags
  train       fit a model on a CSV and save scheme+model to one file
  predict     classify a CSV with a saved model
  curve       emit the split-threshold curve as CSV data

A bench manifest is a JSON file:

    {
      "seed": 0,
      "folds": 10,
      "output_dir": "results",
      "datasets": [{"name": "iris", "path": "data/iris.csv"}],
      "configs": [{"method": "sadd", "classifier": "nb"}]
    }

Config entries take any PipelineConfig field; omitted fields use defaults
and the fully resolved configuration is echoed into the results file along
with the seed and a per-config hash, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .data import (
    AttributeKind,
    Dataset,
    MISSING_TOKEN,
    impute_missing,
    load_csv,
    load_schema,
)
from .discretize import (
    DEFAULT_BINS,
    DEFAULT_N0,
    METHODS,
    apply_scheme,
    build_scheme,
    save_scheme,
    scheme_from_dict,
    scheme_to_dict,
    threshold_curve,
)
from .evaluate import (
    CLASSIFIERS,
    EvalReport,
    PipelineConfig,
    PipelineError,
    config_from_dict,
    cross_validate,
    diagnostics_table,
    emit_report,
    format_comparison_table,
)
from .weighted_nb import (
    TrainOptions,
    categorical_vocab,
    encode_discrete,
    fit_nb,
    identity_params,
    model_from_dict,
    model_to_dict,
    posterior_batch,
    predict_batch,
    train_cawnb,
    train_rnb,
    train_wanbia,
)

MODEL_FORMAT = "nbdisc-model-v1"


def _load_dataset(path: str, schema: str | None, missing_token: str) -> Dataset:
    hint = load_schema(schema) if schema else None
    return load_csv(path, schema_hint=hint, missing_token=missing_token)


def _print_diagnostics(diag) -> None:
    width = max([len("attribute")] + [len(r.name) for r in diag.rows])
    print(f"{'attribute'.ljust(width)}  intervals  mi")
    for r in diag.rows:
        print(f"{r.name.ljust(width)}  {r.intervals:9d}  {r.mi:.4f}")
    if diag.rows:
        print(f"{'AVG'.ljust(width)}  {diag.avg_intervals:9.1f}  {diag.avg_mi:.4f}")


def cmd_discretize(args: argparse.Namespace) -> int:
    data = _load_dataset(args.input, args.schema, args.missing_token)
    imputed = impute_missing(data, data)
    scheme = build_scheme(imputed, None, args.method, n0=args.n0, bins=args.bins)
    diag = diagnostics_table(scheme, apply_scheme(scheme, imputed), imputed.labels)
    if args.output:
        save_scheme(scheme, args.output)
    _print_diagnostics(diag)
    if args.diagnostics_out:
        with open(args.diagnostics_out, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["attribute", "intervals", "mi"])
            for r in diag.rows:
                writer.writerow([r.name, r.intervals, repr(r.mi)])
    return 0


def _manifest_from_args(args: argparse.Namespace) -> dict:
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())
    else:
        if not args.dataset:
            raise ValueError("either a manifest or --dataset is required")
        manifest = {
            "datasets": [{"name": Path(args.dataset).stem, "path": args.dataset}],
            "configs": [
                {
                    "method": args.method,
                    "classifier": args.classifier,
                    "n0": args.n0,
                    "bins": args.bins,
                    "labeled_fraction": args.labeled_fraction,
                    "transductive": not args.inductive,
                }
            ],
        }
    if not manifest.get("datasets") or not manifest.get("configs"):
        raise ValueError("manifest needs at least one dataset and one config")
    manifest.setdefault("seed", args.seed)
    manifest.setdefault("folds", args.folds)
    manifest.setdefault("output_dir", args.output_dir)
    return manifest


def _bench_one(task) -> tuple[int, EvalReport | None, str | None]:
    index, data, name, config, folds = task
    try:
        return index, cross_validate(data, config, folds=folds, dataset_name=name), None
    except Exception as exc:  # noqa: BLE001 - reported per run, bench continues
        return index, None, str(exc)


def cmd_bench(args: argparse.Namespace) -> int:
    manifest = _manifest_from_args(args)
    seed = int(manifest["seed"])
    folds = int(manifest["folds"])
    out_dir = Path(manifest["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    failures: list[str] = []
    datasets = []
    for entry in manifest["datasets"]:
        try:
            data = _load_dataset(entry["path"], entry.get("schema"), args.missing_token)
        except Exception as exc:  # noqa: BLE001 - reported, bench continues
            failures.append(f"{entry['name']}: {exc}")
            continue
        datasets.append((entry["name"], data))
    configs = []
    for doc in manifest["configs"]:
        doc = dict(doc)
        doc.setdefault("seed", seed)
        configs.append(config_from_dict(doc))

    tasks = []
    for name, data in datasets:
        for config in configs:
            tasks.append((len(tasks), data, name, config, folds))
    reports: list[EvalReport | None] = [None] * len(tasks)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_bench_one, tasks))
    else:
        outcomes = [_bench_one(task) for task in tasks]
    for index, report, error in outcomes:
        if error is not None:
            _, _, name, config, _ = tasks[index]
            failures.append(f"{name} / {config.label()}: {error}")
        else:
            reports[index] = report

    completed = [r for r in reports if r is not None]
    emit_report(completed, out_dir / "results.json", seed, format="json")
    emit_report(completed, out_dir / "results.txt", seed, format="table")
    print(format_comparison_table(completed))
    for failure in failures:
        print(f"failed: {failure}", file=sys.stderr)
    return 1 if failures else 0


def cmd_train(args: argparse.Namespace) -> int:
    data = _load_dataset(args.input, args.schema, args.missing_token)
    imputed = impute_missing(data, data)
    scheme = build_scheme(imputed, None, args.method, n0=args.n0, bins=args.bins)
    vocab = categorical_vocab([imputed])
    table = encode_discrete(apply_scheme(scheme, imputed), scheme, vocab)
    model = fit_nb(table, imputed.labels)
    opts = TrainOptions(max_iter=args.max_iter)
    if args.classifier == "nb":
        params = identity_params(model)
    elif args.classifier == "wanbia":
        params = train_wanbia(table, imputed.labels, opts, model=model).params
    elif args.classifier == "cawnb":
        params = train_cawnb(table, imputed.labels, opts, model=model).params
    else:
        params = train_rnb(table, imputed.labels, opts, model=model).params

    imputation = {}
    for j, kind in enumerate(data.kinds):
        present = data.columns[j][~data.missing[:, j]]
        if kind is AttributeKind.NUMERIC:
            imputation[data.names[j]] = float(present.mean())
        else:
            tokens, counts = np.unique(present.astype(str), return_counts=True)
            imputation[data.names[j]] = str(min(tokens[counts == counts.max()]))

    doc = {
        "format": MODEL_FORMAT,
        "seed": args.seed,
        "missing_token": args.missing_token,
        "config": {
            "method": args.method,
            "classifier": args.classifier,
            "n0": args.n0,
            "bins": args.bins,
            "max_iter": args.max_iter,
        },
        "schema": [
            {"name": n, "kind": k.value} for n, k in zip(data.names, data.kinds)
        ],
        "imputation": imputation,
        "scheme": scheme_to_dict(scheme),
        "vocab": {str(j): tokens for j, tokens in vocab.items()},
        "model": model_to_dict(model, params),
    }
    Path(args.output).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"model written to {args.output}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    model_path = Path(args.model)
    if not model_path.exists():
        raise FileNotFoundError(f"model file not found: {args.model}")
    doc = json.loads(model_path.read_text())
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{args.model}: not a model file")
    schema = {entry["name"]: AttributeKind(entry["kind"]) for entry in doc["schema"]}
    missing_token = args.missing_token or doc["missing_token"]
    data = load_csv(args.input, schema_hint=schema, missing_token=missing_token)
    expected = [entry["name"] for entry in doc["schema"]]
    if data.names != expected:
        raise ValueError(
            f"schema mismatch: model expects columns {expected}, file has {data.names}"
        )

    # Impute with the training statistics stored in the model file.
    columns = []
    for j, name in enumerate(data.names):
        col = data.columns[j].copy()
        col[data.missing[:, j]] = doc["imputation"][name]
        columns.append(col)
    imputed = Dataset(
        names=data.names,
        kinds=data.kinds,
        columns=columns,
        missing=np.zeros_like(data.missing),
        labels=data.labels,
    )

    scheme = scheme_from_dict(doc["scheme"])
    vocab = {int(j): list(tokens) for j, tokens in doc["vocab"].items()}
    table = encode_discrete(apply_scheme(scheme, imputed), scheme, vocab)
    model, params = model_from_dict(doc["model"])
    predictions = predict_batch(model, params, table.x)
    posteriors = posterior_batch(model, params, table.x)

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["predicted"] + [f"p_{c}" for c in model.classes])
        for label, row in zip(predictions, posteriors):
            writer.writerow([label] + [repr(float(p)) for p in row])
    finally:
        if args.output:
            out.close()
    return 0


def cmd_curve(args: argparse.Namespace) -> int:
    if args.n_min < 2:
        raise ValueError("--n-min must be at least 2")
    if args.n_max < args.n_min:
        raise ValueError("--n-max must be >= --n-min")
    rows = threshold_curve(range(args.n_min, args.n_max + 1, args.n_step), args.n0)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["n", "raw"] + [f"n0_{n0}" for n0 in args.n0])
        for row in rows:
            writer.writerow([row.n, repr(row.raw)] + [repr(v) for v in row.scaled])
    finally:
        if args.output:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nbdisc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discretize", help="build a cut-point scheme for one CSV")
    p.add_argument("input", help="CSV file; class column last")
    p.add_argument("--method", choices=METHODS, default="sadd")
    p.add_argument("--n0", type=int, default=DEFAULT_N0)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--schema", help="sidecar schema file (name,kind per line)")
    p.add_argument("--missing-token", default=MISSING_TOKEN)
    p.add_argument("--output", help="scheme file to write")
    p.add_argument("--diagnostics-out", help="CSV file for the diagnostics table")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("bench", help="cross-validation benchmark")
    p.add_argument("manifest", nargs="?", help="manifest JSON file")
    p.add_argument("--dataset", help="single CSV to benchmark (instead of a manifest)")
    p.add_argument("--method", choices=METHODS, default="sadd")
    p.add_argument("--classifier", choices=CLASSIFIERS, default="nb")
    p.add_argument("--n0", type=int, default=DEFAULT_N0)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labeled-fraction", type=float, default=1.0)
    p.add_argument("--inductive", action="store_true",
                   help="keep test-row features out of scheme derivation")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--missing-token", default=MISSING_TOKEN)
    p.add_argument("--output-dir", default="results")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("train", help="fit and save scheme+model")
    p.add_argument("input", help="training CSV")
    p.add_argument("--method", choices=METHODS, default="sadd")
    p.add_argument("--classifier", choices=CLASSIFIERS, default="rnb")
    p.add_argument("--n0", type=int, default=DEFAULT_N0)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schema", help="sidecar schema file")
    p.add_argument("--missing-token", default=MISSING_TOKEN)
    p.add_argument("--output", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify a CSV with a saved model")
    p.add_argument("model", help="model file from `nbdisc train`")
    p.add_argument("input", help="CSV with the training schema (labels may be dummies)")
    p.add_argument("--missing-token", default=None)
    p.add_argument("--output", help="CSV file for predictions (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("curve", help="emit the split-threshold curve")
    p.add_argument("--n0", type=int, nargs="+", default=[100, 2000])
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--n-step", type=int, default=1)
    p.add_argument("--output", help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_curve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
