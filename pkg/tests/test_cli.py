import csv
import json
import os

import pytest

from robustpanel import cli
from robustpanel.io import write_panel_csv

from conftest import synth_panel


@pytest.fixture
def panel_csv(tmp_path):
    path = str(tmp_path / "panel.csv")
    write_panel_csv(synth_panel(n=30, t=4, seed=5), path)
    return path


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestFitCommand:
    def test_ls_fit_writes_report_and_weights(self, panel_csv, tmp_path, capsys):
        out = str(tmp_path / "report.json")
        code, _, err = run(
            ["fit", "--input", panel_csv, "--estimator", "ls", "--out", out],
            capsys,
        )
        assert code == 0
        assert err == ""
        report = json.loads(open(out).read())
        assert report["estimator"] == "ls"
        assert len(report["beta"]) == 2
        assert len(report["std_errors"]) == 2
        assert report["converged"] is True
        assert report["c_selected"] is None
        weights_path = str(tmp_path / "report_weights.csv")
        with open(weights_path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["unit", "time", "weight"]
        assert len(rows) == 1 + 30 * 4
        assert all(float(r[2]) == 1.0 for r in rows[1:])

    def test_tukey_fit_reports_tuning(self, panel_csv, tmp_path, capsys):
        out = str(tmp_path / "report.json")
        code, _, _ = run(
            ["fit", "--input", panel_csv, "--estimator", "tukey", "--out", out],
            capsys,
        )
        assert code == 0
        report = json.loads(open(out).read())
        assert report["c_selected"] is not None
        assert report["iterations"] >= 1
        weights_path = str(tmp_path / "report_weights.csv")
        with open(weights_path) as fh:
            rows = list(csv.reader(fh))[1:]
        values = [float(r[2]) for r in rows]
        assert all(0.0 <= w <= 1.0 for w in values)

    def test_fixed_c_accepted(self, panel_csv, tmp_path, capsys):
        out = str(tmp_path / "report.json")
        code, _, _ = run(
            ["fit", "--input", panel_csv, "--estimator", "huber",
             "--c", "1.345", "--out", out],
            capsys,
        )
        assert code == 0
        assert json.loads(open(out).read())["c_selected"] == 1.345

    def test_bad_estimator_is_usage_error(self, panel_csv, capsys):
        code, _, err = run(
            ["fit", "--input", panel_csv, "--estimator", "frob"], capsys,
        )
        assert code == 1
        assert err.startswith("error:")
        assert err.count("\n") == 1

    def test_non_numeric_c_is_usage_error(self, panel_csv, tmp_path, capsys):
        code, _, err = run(
            ["fit", "--input", panel_csv, "--estimator", "huber",
             "--c", "lots", "--out", str(tmp_path / "r.json")],
            capsys,
        )
        assert code == 1
        assert err.startswith("error:")

    def test_missing_input_is_data_error(self, tmp_path, capsys):
        code, _, err = run(
            ["fit", "--input", str(tmp_path / "absent.csv"),
             "--estimator", "ls", "--out", str(tmp_path / "r.json")],
            capsys,
        )
        assert code == 2
        assert err.startswith("error:")

    def test_malformed_csv_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("unit,time,y,x1\na,1,1,1\na,1,2,2\n")
        code, _, err = run(
            ["fit", "--input", str(bad), "--estimator", "ls",
             "--out", str(tmp_path / "r.json")],
            capsys,
        )
        assert code == 2
        assert err.startswith("error:")

    def test_degenerate_design_is_estimation_error(self, tmp_path, capsys):
        # regressor constant within every unit: the within transform
        # removes it entirely and the normal equations are singular
        flat = tmp_path / "flat.csv"
        flat.write_text(
            "unit,time,y,x1\n"
            "a,1,1.0,5.0\na,2,2.0,5.0\n"
            "b,1,3.0,7.0\nb,2,5.0,7.0\n"
        )
        code, _, err = run(
            ["fit", "--input", str(flat), "--estimator", "ls",
             "--out", str(tmp_path / "r.json")],
            capsys,
        )
        assert code == 3
        assert err.startswith("error:")

    def test_no_arguments_is_usage_error(self, capsys):
        code, _, err = run([], capsys)
        assert code == 1
        assert err.startswith("error:")


TINY_CONFIG = {
    "estimators": ["ls"],
    "s": 3,
    "master_seed": 7,
    "outlier_study": {
        "n_units": 20,
        "n_periods": 2,
        "kinds": ["random_vertical"],
        "m_levels": [2],
        "n_test": 4,
    },
    "consistency_study": {
        "n_values": [20],
        "t_fixed": 3,
        "t_values": [4],
        "n_fixed": 10,
    },
    "error_dist_study": {"pairs": [[10, 4]]},
}


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


class TestSimulateCommand:
    def test_tiny_study_writes_all_tables(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_CONFIG)
        out_dir = str(tmp_path / "out")
        code, _, err = run(["simulate", "--config", cfg, "--out-dir", out_dir], capsys)
        assert code == 0
        assert err == ""

        with open(os.path.join(out_dir, "mse_table.csv")) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["estimator", "random_vertical_m2"]
        assert rows[1][0] == "ls"
        assert float(rows[1][1]) > 0

        with open(os.path.join(out_dir, "rmse_table.csv")) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["estimator", "random_vertical_m2"]
        assert float(rows[1][1]) > 0

        with open(os.path.join(out_dir, "consistency_curves.csv")) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["axis", "n", "t", "estimator", "mse"]
        axes = [r[0] for r in rows[1:]]
        assert axes == ["n", "t"]

        with open(os.path.join(out_dir, "se_samples.csv")) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["error_dist", "n", "t", "estimator", "rep", "se"]
        dists = {r[0] for r in rows[1:]}
        assert dists == {"normal", "t5", "chisq4", "cauchy"}
        # s replications per (dist, pair, estimator)
        assert len(rows) - 1 == 4 * 1 * 1 * TINY_CONFIG["s"]

    def test_sections_optional(self, tmp_path, capsys):
        payload = {k: v for k, v in TINY_CONFIG.items() if k != "consistency_study"}
        payload.pop("error_dist_study")
        cfg = write_config(tmp_path, payload)
        out_dir = str(tmp_path / "out")
        code, _, _ = run(["simulate", "--config", cfg, "--out-dir", out_dir], capsys)
        assert code == 0
        names = sorted(os.listdir(out_dir))
        assert names == ["mse_table.csv", "rmse_table.csv"]

    def test_repeat_runs_byte_identical(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_CONFIG)
        dirs = [str(tmp_path / "run1"), str(tmp_path / "run2")]
        for d in dirs:
            assert run(["simulate", "--config", cfg, "--out-dir", d], capsys)[0] == 0
        for name in ("mse_table.csv", "rmse_table.csv",
                     "consistency_curves.csv", "se_samples.csv"):
            first = open(os.path.join(dirs[0], name), "rb").read()
            second = open(os.path.join(dirs[1], name), "rb").read()
            assert first == second, name

    def test_unknown_config_key_is_data_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"bogus": 1})
        code, _, err = run(
            ["simulate", "--config", cfg, "--out-dir", str(tmp_path / "o")], capsys,
        )
        assert code == 2
        assert err.startswith("error:")
        assert "bogus" in err

    def test_invalid_json_is_data_error(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text("{nope")
        code, _, err = run(
            ["simulate", "--config", str(path), "--out-dir", str(tmp_path / "o")],
            capsys,
        )
        assert code == 2
        assert err.startswith("error:")

    def test_missing_config_is_data_error(self, tmp_path, capsys):
        code, _, err = run(
            ["simulate", "--config", str(tmp_path / "absent.json"),
             "--out-dir", str(tmp_path / "o")],
            capsys,
        )
        assert code == 2
        assert err.startswith("error:")
