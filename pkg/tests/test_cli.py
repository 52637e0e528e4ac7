from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from nbdisc.cli import main
from nbdisc.discretize import load_scheme


@pytest.fixture()
def separable_csv(tmp_path):
    path = tmp_path / "toy.csv"
    lines = ["x,color,class"]
    for i in range(30):
        lines.append(f"{i / 10:.1f},red,A")
    for i in range(30):
        lines.append(f"{5 + i / 10:.1f},blue,B")
    path.write_text("\n".join(lines) + "\n")
    return path


class TestDiscretizeCommand:
    def test_writes_scheme_and_diagnostics(self, iris_path, tmp_path, capsys):
        scheme_path = tmp_path / "scheme.json"
        diag_path = tmp_path / "diag.csv"
        code = main(
            [
                "discretize",
                str(iris_path),
                "--method",
                "sadd",
                "--output",
                str(scheme_path),
                "--diagnostics-out",
                str(diag_path),
            ]
        )
        assert code == 0
        scheme = load_scheme(scheme_path)
        assert scheme.method == "sadd"
        assert scheme.params == {"n0": 2000}
        rows = list(csv.reader(diag_path.open()))
        assert rows[0] == ["attribute", "intervals", "mi"]
        assert len(rows) == 5
        assert "AVG" in capsys.readouterr().out

    def test_constant_column(self, tmp_path, capsys):
        path = tmp_path / "const.csv"
        path.write_text("x,class\n1.0,A\n1.0,B\n1.0,A\n")
        assert main(["discretize", str(path), "--method", "mdlp"]) == 0
        out = capsys.readouterr().out
        assert "1" in out and "0.0000" in out

    def test_unknown_method_usage_error(self, iris_path):
        with pytest.raises(SystemExit) as err:
            main(["discretize", str(iris_path), "--method", "nope"])
        assert err.value.code != 0

    def test_missing_file(self, tmp_path):
        assert main(["discretize", str(tmp_path / "absent.csv")]) == 2


class TestCurveCommand:
    def test_single_row(self, tmp_path):
        out = tmp_path / "curve.csv"
        code = main(["curve", "--n-min", "2", "--n-max", "2", "--output", str(out)])
        assert code == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["n", "raw", "n0_100", "n0_2000"]
        assert rows[1][0] == "2"
        assert float(rows[1][1]) == 0.0

    def test_default_n0_columns(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert main(["curve", "--n-max", "50", "--output", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        n = [int(r[0]) for r in rows[1:]]
        raw = [float(r[1]) for r in rows[1:]]
        scaled_100 = [float(r[2]) for r in rows[1:]]
        scaled_2000 = [float(r[3]) for r in rows[1:]]
        assert n[0] == 2 and n[-1] == 50
        i = n.index(6)
        assert scaled_2000[i] == pytest.approx(0.5 * raw[i], rel=2e-3)
        assert abs(scaled_100[i] - scaled_2000[i]) < 0.01
        # the scaled curve never crosses the raw curve
        assert all(s <= r for s, r in zip(scaled_100, raw))

    def test_bad_range(self):
        assert main(["curve", "--n-min", "1"]) == 2
        assert main(["curve", "--n-min", "10", "--n-max", "5"]) == 2


class TestTrainPredict:
    def test_round_trip_accuracy(self, separable_csv, tmp_path):
        model_path = tmp_path / "model.json"
        preds_path = tmp_path / "preds.csv"
        assert main(
            [
                "train",
                str(separable_csv),
                "--method",
                "sadd",
                "--classifier",
                "rnb",
                "--max-iter",
                "50",
                "--output",
                str(model_path),
            ]
        ) == 0
        assert main(
            ["predict", str(model_path), str(separable_csv), "--output", str(preds_path)]
        ) == 0

        rows = list(csv.reader(preds_path.open()))
        assert rows[0][0] == "predicted"
        truth = ["A"] * 30 + ["B"] * 30
        predictions = [r[0] for r in rows[1:]]
        assert predictions == truth
        for row in rows[1:]:
            assert math.fsum(float(v) for v in row[1:]) == pytest.approx(1.0, abs=1e-9)

    def test_schema_mismatch(self, separable_csv, tmp_path):
        model_path = tmp_path / "model.json"
        main(["train", str(separable_csv), "--output", str(model_path), "--max-iter", "0"])
        bad = tmp_path / "bad.csv"
        bad.write_text("x,class\n1.0,A\n")
        assert main(["predict", str(model_path), str(bad)]) == 2

    def test_missing_model(self, separable_csv, tmp_path):
        code = main(["predict", str(tmp_path / "no_model.json"), str(separable_csv)])
        assert code == 2

    def test_unseen_category_still_predicts(self, separable_csv, tmp_path, capsys):
        model_path = tmp_path / "model.json"
        main(["train", str(separable_csv), "--output", str(model_path), "--max-iter", "0"])
        query = tmp_path / "query.csv"
        query.write_text("x,color,class\n0.1,green,unknown\n")
        capsys.readouterr()
        assert main(["predict", str(model_path), str(query)]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[1].startswith("A,")


def write_manifest(tmp_path, iris_path, configs, **extra):
    manifest = {
        "seed": 0,
        "folds": 10,
        "output_dir": str(tmp_path / "out"),
        "datasets": [{"name": "iris", "path": str(iris_path)}],
        "configs": configs,
        **extra,
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


class TestBenchCommand:
    def test_two_config_manifest(self, iris_path, tmp_path, capsys):
        manifest = write_manifest(
            tmp_path,
            iris_path,
            [
                {"method": "sadd", "classifier": "nb"},
                {"method": "mdlp", "classifier": "nb"},
            ],
        )
        assert main(["bench", str(manifest)]) == 0
        results = json.loads((tmp_path / "out" / "results.json").read_text())
        assert results["seed"] == 0
        assert len(results["runs"]) == 2
        assert (tmp_path / "out" / "results.txt").exists()
        table = capsys.readouterr().out
        assert "iris" in table and "sadd+nb" in table

    def test_empty_manifest_usage_error(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text(json.dumps({"datasets": [], "configs": []}))
        assert main(["bench", str(path)]) == 2

    def test_unknown_config_field_usage_error(self, iris_path, tmp_path, capsys):
        manifest = write_manifest(
            tmp_path, iris_path, [{"method": "mdlp", "clasifier": "nb"}]
        )
        assert main(["bench", str(manifest)]) == 2
        assert "unknown config fields" in capsys.readouterr().err

    def test_byte_identical_reruns(self, iris_path, tmp_path):
        manifest = write_manifest(
            tmp_path, iris_path, [{"method": "mdlp", "classifier": "nb"}]
        )
        assert main(["bench", str(manifest)]) == 0
        first = (tmp_path / "out" / "results.json").read_bytes()
        assert main(["bench", str(manifest)]) == 0
        assert (tmp_path / "out" / "results.json").read_bytes() == first

    def test_single_dataset_flags(self, iris_path, tmp_path):
        out = tmp_path / "flagout"
        code = main(
            [
                "bench",
                "--dataset",
                str(iris_path),
                "--method",
                "eqf",
                "--bins",
                "8",
                "--folds",
                "5",
                "--output-dir",
                str(out),
            ]
        )
        assert code == 0
        results = json.loads((out / "results.json").read_text())
        assert results["runs"][0]["config"]["method"] == "eqf"
        assert results["runs"][0]["config"]["bins"] == 8
        assert len(results["runs"][0]["fold_accuracies"]) == 5

    def test_inductive_flag(self, iris_path, tmp_path):
        out = tmp_path / "ind"
        code = main(
            [
                "bench",
                "--dataset",
                str(iris_path),
                "--method",
                "sadd",
                "--inductive",
                "--folds",
                "5",
                "--output-dir",
                str(out),
            ]
        )
        assert code == 0
        results = json.loads((out / "results.json").read_text())
        assert results["runs"][0]["config"]["transductive"] is False

    def test_custom_missing_token(self, tmp_path, capsys):
        path = tmp_path / "na.csv"
        path.write_text("x,class\n1.0,A\nNA,A\n2.0,B\n5.0,B\n")
        assert main(["discretize", str(path), "--missing-token", "NA"]) == 0
        assert "AVG" in capsys.readouterr().out

    def test_partial_label_manifest(self, iris_path, tmp_path):
        manifest = write_manifest(
            tmp_path,
            iris_path,
            [{"method": "sadd", "classifier": "nb", "labeled_fraction": 0.4}],
        )
        assert main(["bench", str(manifest)]) == 0
        results = json.loads((tmp_path / "out" / "results.json").read_text())
        assert results["runs"][0]["config"]["labeled_fraction"] == 0.4

    def test_failed_run_reported_and_exit_nonzero(self, iris_path, tmp_path, capsys):
        # second dataset path is missing: its runs fail, the rest complete
        manifest = write_manifest(
            tmp_path,
            iris_path,
            [{"method": "mdlp", "classifier": "nb"}],
        )
        doc = json.loads(manifest.read_text())
        doc["datasets"].append({"name": "ghost", "path": str(tmp_path / "ghost.csv")})
        manifest.write_text(json.dumps(doc))
        assert main(["bench", str(manifest)]) == 1
        captured = capsys.readouterr()
        assert "failed: ghost" in captured.err
        results = json.loads((tmp_path / "out" / "results.json").read_text())
        assert len(results["runs"]) == 1

    def test_parallel_jobs_match_serial(self, iris_path, tmp_path):
        manifest = write_manifest(
            tmp_path,
            iris_path,
            [
                {"method": "mdlp", "classifier": "nb"},
                {"method": "eqw", "classifier": "nb"},
            ],
        )
        assert main(["bench", str(manifest)]) == 0
        serial = (tmp_path / "out" / "results.json").read_bytes()
        assert main(["bench", str(manifest), "--jobs", "2"]) == 0
        assert (tmp_path / "out" / "results.json").read_bytes() == serial
