import json

import numpy as np
import pytest

from resetkit import cli


@pytest.fixture
def spec_files(tmp_path):
    paths = {}
    docs = {
        "exp1": {"family": "exponential", "params": {"rate": 1.0}},
        "weibull": {"family": "weibull", "params": {"shape": 2.0}},
        "uniform02": {"family": "from_mrl",
                      "params": {"grid": [0.0, 1.0], "values": [1.0, 0.5],
                                 "terminal": "linear"}},
    }
    for name, doc in docs.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    return paths


def run(argv):
    return cli.main(argv)


class TestClassify:
    def test_weibull_override_all_no_bigger(self, spec_files, tmp_path):
        out = tmp_path / "report.json"
        code = run(["classify", "--spec", spec_files["weibull"],
                    "--shape", "0.5", "-o", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        for name in ("no_bigger_reset", "no_bigger_exp_reset",
                     "no_bigger_mean", "no_bigger_exp_mean"):
            assert rep["conditions"][name]["status"] == "holds", name
        assert rep["config"]["shape"] == 0.5
        assert rep["config"]["version"]

    def test_exponential_flag(self, spec_files, tmp_path):
        out = tmp_path / "report.json"
        assert run(["classify", "--spec", spec_files["exp1"],
                    "-o", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["exponential_flag"] is True

    def test_human_format(self, spec_files, capsys):
        assert run(["classify", "--spec", spec_files["exp1"],
                    "--format", "human"]) == 0
        text = capsys.readouterr().out
        assert "implication matrix" in text
        assert "invariant_reset" in text

    def test_strict_inconclusive_exit(self, tmp_path):
        grid = np.linspace(0.0, 8.0, 161)
        vals = np.exp(-grid)
        vals[20] *= 1.0 - 1e-8  # sub-tolerance dent
        doc = {"family": "tabulated", "grid": list(grid),
               "values": [float(v) for v in vals],
               "interpolation": "log-linear"}
        p = tmp_path / "dented.json"
        p.write_text(json.dumps(doc))
        assert run(["classify", "--spec", str(p), "--strict",
                    "-o", str(tmp_path / "r.json")]) == 2
        assert run(["classify", "--spec", str(p),
                    "-o", str(tmp_path / "r2.json")]) == 0


class TestErrors:
    def test_malformed_json_is_data_error(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert run(["classify", "--spec", str(p)]) == 65

    def test_invalid_spec_is_data_error(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"family": "exponential",
                                 "params": {"rate": -2.0}}))
        assert run(["classify", "--spec", str(p)]) == 65

    def test_missing_file_is_io_error(self, tmp_path):
        assert run(["classify", "--spec", str(tmp_path / "nope.json")]) == 74

    def test_usage_error_exit_code(self, spec_files):
        with pytest.raises(SystemExit) as info:
            run(["classify"])
        assert info.value.code == 64

    def test_bad_reset_descriptor(self, spec_files):
        assert run(["transform", "--spec", spec_files["exp1"],
                    "--reset", "poisson:1"]) == 65


class TestTransform:
    def test_exponential_untouched(self, spec_files, tmp_path):
        out = tmp_path / "t.csv"
        assert run(["transform", "--spec", spec_files["exp1"],
                    "--reset", "exp:2", "--t-max", "6", "--points", "101",
                    "-o", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,tail_original,tail_transformed"
        rows = np.array([[float(x) for x in ln.split(",")]
                         for ln in lines[1:]])
        assert np.max(np.abs(rows[:, 1] - rows[:, 2])) < 1e-6

    def test_weibull_det_direction(self, spec_files, tmp_path):
        out = tmp_path / "t.csv"
        assert run(["transform", "--spec", spec_files["weibull"],
                    "--reset", "det:1", "--t-max", "6", "--points", "121",
                    "-o", str(out)]) == 0
        rows = np.array([[float(x) for x in ln.split(",")] for ln in
                         out.read_text().splitlines()[1:]])
        assert np.all(rows[:, 2] >= rows[:, 1] - 1e-12)

    def test_branching_exp_direction(self, spec_files, tmp_path):
        out = tmp_path / "t.csv"
        assert run(["transform", "--spec", spec_files["weibull"],
                    "--shape", "0.5", "--branching", "2", "--reset", "exp:1",
                    "--t-max", "8", "--points", "101", "-o", str(out)]) == 0
        rows = np.array([[float(x) for x in ln.split(",")] for ln in
                         out.read_text().splitlines()[1:]])
        assert np.all(rows[:, 2] <= rows[:, 1] + 1e-6)

    def test_json_output_roundtrips_as_spec(self, spec_files, tmp_path):
        out = tmp_path / "transformed.json"
        assert run(["transform", "--spec", spec_files["weibull"],
                    "--reset", "det:1", "--format", "json", "--t-max", "5",
                    "--points", "65", "-o", str(out)]) == 0
        assert run(["classify", "--spec", str(out),
                    "-o", str(tmp_path / "rep.json")]) == 0

    def test_single_reset_flag(self, spec_files, tmp_path):
        out = tmp_path / "t.csv"
        assert run(["transform", "--spec", spec_files["weibull"],
                    "--shape", "0.5", "--reset", "det:1", "--single",
                    "--t-max", "4", "--points", "81", "-o", str(out)]) == 0
        rows = np.array([[float(x) for x in ln.split(",")] for ln in
                         out.read_text().splitlines()[1:]])
        t2 = rows[np.isclose(rows[:, 0], 2.0)][0]
        assert t2[2] == pytest.approx(np.exp(-2.0), rel=1e-9)


class TestSimulate:
    def test_byte_identical_reruns(self, spec_files, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ["simulate", "--spec", spec_files["exp1"], "--reset", "det:0.5",
                "--replicates", "20000", "--seed", "42"]
        assert run(argv + ["-o", str(a)]) == 0
        assert run(argv + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        rep = json.loads(a.read_text())
        assert abs(rep["mean"] - 1.0) < 4.0 * rep["mean_se"]

    def test_file_reset_law(self, spec_files, tmp_path):
        out = tmp_path / "s.json"
        assert run(["simulate", "--spec", spec_files["exp1"],
                    "--reset", f"file:{spec_files['uniform02']}",
                    "--replicates", "5000", "--seed", "7",
                    "-o", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["reset"] == "file:from_mrl"

    def test_censoring_exit_code_with_partial_report(self, spec_files,
                                                     tmp_path):
        out = tmp_path / "s.json"
        code = run(["simulate", "--spec", spec_files["weibull"],
                    "--shape", "0.5", "--reset", "det:0.01",
                    "--replicates", "500", "--seed", "1",
                    "--max-cycles", "3", "-o", str(out)])
        assert code == 3
        rep = json.loads(out.read_text())
        assert rep["error"] == "excessive_censoring"
        assert rep["censored_fraction"] > 0.01


class TestOptimize:
    def test_exponential_flat_report(self, spec_files, tmp_path):
        out = tmp_path / "o.json"
        assert run(["optimize", "--spec", spec_files["exp1"],
                    "-o", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["sup"] == pytest.approx(1.0, rel=1e-6)
        assert rep["inf"] == pytest.approx(1.0, rel=1e-6)
        assert rep["exponential_improves"] is False
        assert rep["restart_harmful"] is False
        assert rep["config"]["version"]

    def test_weibull_light_flags_harmful(self, spec_files, tmp_path):
        out = tmp_path / "o.json"
        assert run(["optimize", "--spec", spec_files["weibull"],
                    "--shape", "1.5", "-o", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["restart_harmful"] is True
        assert rep["sup"] == "inf"

    def test_csv_curve(self, spec_files, tmp_path):
        out = tmp_path / "curve.csv"
        assert run(["optimize", "--spec", spec_files["exp1"], "--format",
                    "csv", "-o", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "r,deterministic_reset_mean"
        assert len(lines) > 100
