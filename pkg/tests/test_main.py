"""Tests for the command-line interface."""

import json

import pandas as pd
import pytest

from cutpoint_lasso import pipelines
from cutpoint_lasso.errors import NotConverged
from cutpoint_lasso.main import build_parser, main, manifest_path

FAST = ["--bins", "6", "--folds", "3", "--n-lambdas", "8"]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def sim_csv(workdir):
    """A scenario 1 dataset written by the simulate command."""
    path = workdir / "sim.csv"
    assert main(["simulate", "--scenario", "1", "--n", "150", "--seed", "3", "--out", str(path)]) == 0
    return path


class TestParser:
    """Tests for argument parsing and the help command."""

    def test_subcommands_registered(self):
        """Test that every subcommand has a parser."""
        _, sub_map = build_parser()
        assert set(sub_map) == {"fit", "simulate", "benchmark", "screen", "evaluate", "help"}

    def test_benchmark_lists(self):
        """Test comma-separated scenario, size and method lists."""
        parser, _ = build_parser()
        argv = ["benchmark", "--scenario", "1,3", "--n", "300,500", "--methods", "bini", "--out", "d"]
        args = parser.parse_args(argv)
        assert args.scenario == [1, 3]
        assert args.n == [300, 500]
        assert args.methods == ["bini"]

    def test_help(self, capsys):
        """Test full and per-command help."""
        assert main(["help"]) == 0
        assert "simulate" in capsys.readouterr().out
        assert main(["help", "fit"]) == 0
        assert "--max-cuts" in capsys.readouterr().out

    def test_help_unknown_command(self):
        """Test help for a command that does not exist."""
        assert main(["help", "bogus"]) == 1

    def test_unknown_subcommand(self):
        """Test that argparse errors become exit code 1."""
        assert main(["bogus"]) == 1

    def test_no_subcommand(self):
        """Test that a bare invocation is an error."""
        assert main([]) == 1


class TestSimulate:
    """Tests for the simulate command."""

    def test_writes_csv_and_manifest(self, sim_csv):
        """Test the dataset layout and the manifest next to it."""
        frame = pd.read_csv(sim_csv)
        assert list(frame.columns) == ["time", "event", "x1", "x2"]
        assert len(frame) == 150
        manifest = json.loads(manifest_path(sim_csv).read_text())
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 3
        assert manifest["config"]["truth"]["true_cuts"] == {"x1": [0.3, 0.7], "x2": [0.3, 0.7]}
        assert manifest["outputs"] == [str(sim_csv)]

    def test_same_seed_same_bytes(self, sim_csv, workdir):
        """Test that a rerun with the same seed writes an identical file."""
        again = workdir / "again.csv"
        assert main(["simulate", "--scenario", "1", "--n", "150", "--seed", "3", "--out", str(again)]) == 0
        assert again.read_bytes() == sim_csv.read_bytes()

    def test_invalid_scenario_parameters(self, workdir):
        """Test that a bad censoring target exits 1."""
        out = workdir / "bad.csv"
        assert main(["simulate", "--scenario", "1", "--n", "50", "--censor", "1.5", "--out", str(out)]) == 1
        assert not out.exists()


class TestFit:
    """Tests for the fit command."""

    def test_report_and_manifest(self, sim_csv, workdir):
        """Test the report schema and the input digest in the manifest."""
        out = workdir / "report.json"
        assert main(["fit", "--input", str(sim_csv), "--out", str(out), "--seed", "1", *FAST]) == 0
        report = json.loads(out.read_text())
        assert set(report) == {"method", "lambda", "features", "grid", "seed", "max_cuts", "warnings"}
        assert report["method"] == "bini"
        for feature in report["features"]:
            assert feature["thresholds"] == sorted(feature["thresholds"])
        manifest = json.loads(manifest_path(out).read_text())
        assert list(manifest["inputs"]) == [str(sim_csv)]
        assert len(manifest["inputs"][str(sim_csv)]) == 64
        assert manifest["config"]["grid"]["bins_per_feature"] == 6

    def test_capped_mini(self, sim_csv, workdir):
        """Test that the two-step cap limits every feature to two cut-points."""
        out = workdir / "capped.json"
        argv = ["fit", "-i", str(sim_csv), "-o", str(out), "--method", "mini", "--max-cuts", "2",
                "--mode", "two-step", *FAST]
        assert main(argv) == 0
        report = json.loads(out.read_text())
        assert report["max_cuts"] == 2
        assert all(len(f["thresholds"]) <= 2 for f in report["features"])

    def test_missing_event_column(self, sim_csv, workdir):
        """Test that a missing column exits 1 without writing a report."""
        out = workdir / "report.json"
        assert main(["fit", "-i", str(sim_csv), "-o", str(out), "--event", "status", *FAST]) == 1
        assert not out.exists()

    def test_missing_input_file(self, workdir):
        """Test that an absent input exits 1."""
        assert main(["fit", "-i", str(workdir / "absent.csv"), "-o", str(workdir / "r.json")]) == 1

    def test_numerical_failure_exit_codes(self, sim_csv, workdir, monkeypatch):
        """Test exit 2 for a solver failure under --strict, 1 otherwise."""

        def not_converged(*args, **kwargs):
            raise NotConverged(10, 0.5)

        monkeypatch.setattr("cutpoint_lasso.main.fit_binilasso", not_converged)
        out = str(workdir / "r.json")
        assert main(["fit", "-i", str(sim_csv), "-o", out, "--strict"]) == 2
        assert main(["fit", "-i", str(sim_csv), "-o", out]) == 1

    def test_strict_mini_without_usable_columns(self, workdir):
        """Test that --strict accepts a mini fit whose indicators are all degenerate."""
        data = workdir / "separated.csv"
        rows = "".join(f"{t},1,{9 - t}\n" for t in range(1, 9))
        data.write_text("time,event,x1\n" + rows, encoding="utf-8")
        out = workdir / "mini.json"
        argv = ["fit", "-i", str(data), "-o", str(out), "--method", "mini", "--strict", "--bins", "4"]
        assert main(argv) == 0
        assert json.loads(out.read_text())["features"] == []

    @pytest.mark.parametrize("mode", ["one-step", "two-step"])
    def test_strict_applies_to_limited_procedures(self, sim_csv, workdir, monkeypatch, mode):
        """Test exit 2 for an unconverged limited fit under --strict, 0 otherwise."""
        real_fit_path = pipelines.fit_path

        def unconverged_path(*args, **kwargs):
            path = real_fit_path(*args, **kwargs)
            for f in path.fits:
                f.converged = False
            return path

        monkeypatch.setattr("cutpoint_lasso.pipelines.fit_path", unconverged_path)
        out = str(workdir / "limited.json")
        argv = ["fit", "-i", str(sim_csv), "-o", out, "--max-cuts", "2", "--mode", mode, *FAST]
        assert main([*argv, "--strict"]) == 2
        assert main(argv) == 0

    def test_empty_input_file(self, workdir):
        """Test that a zero-byte CSV exits 1."""
        empty = workdir / "empty.csv"
        empty.write_text("", encoding="utf-8")
        assert main(["fit", "-i", str(empty), "-o", str(workdir / "r.json")]) == 1


class TestScreenAndEvaluate:
    """Tests for the screen and evaluate commands."""

    def test_screen(self, sim_csv, workdir):
        """Test the ranking table and the selected feature list."""
        out = workdir / "screen.csv"
        assert main(["screen", "-i", str(sim_csv), "-o", str(out), "--top", "1"]) == 0
        table = pd.read_csv(out)
        assert set(table["feature"]) == {"x1", "x2"}
        selected = json.loads((workdir / "screen.selected.json").read_text())
        assert 1 <= len(selected["selected"]) <= 2

    def test_screen_rejects_zero_top(self, sim_csv, workdir):
        """Test that --top 0 exits 1."""
        assert main(["screen", "-i", str(sim_csv), "-o", str(workdir / "s.csv"), "--top", "0"]) == 1

    def test_evaluate_saved_report(self, sim_csv, workdir):
        """Test in-sample and out-of-fold evaluation of a hand-written report."""
        report = workdir / "report.json"
        report.write_text(json.dumps({
            "method": "bini",
            "lambda": 0.1,
            "features": [{"name": "x1", "thresholds": [0.5], "effects": [1.0]}],
        }))
        out = workdir / "eval.json"
        assert main(["evaluate", "-i", str(sim_csv), "--report", str(report), "-o", str(out)]) == 0
        bundle = json.loads(out.read_text())
        assert bundle["n_cutpoints"] == 1
        assert 0.0 <= bundle["ibs"] <= 1.0
        assert "wall_time_seconds" not in bundle
        cv_out = workdir / "eval_cv.json"
        argv = ["evaluate", "-i", str(sim_csv), "--report", str(report), "-o", str(cv_out), "--folds", "3"]
        assert main(argv) == 0
        assert json.loads(cv_out.read_text())["n_cutpoints"] == 1

    def test_evaluate_empty_report(self, sim_csv, workdir):
        """Test that a report without thresholds exits 1."""
        report = workdir / "empty.json"
        report.write_text(json.dumps({"method": "bini", "lambda": 0.1, "features": []}))
        assert main(["evaluate", "-i", str(sim_csv), "--report", str(report), "-o", str(workdir / "e.json")]) == 1


class TestBenchmark:
    """Tests for the benchmark command."""

    BASE = ["benchmark", "--scenario", "1", "--n", "100", "--replicates", "1", "--methods", "bini", *FAST]

    def test_writes_scenario_files(self, workdir):
        """Test the per-scenario files and the directory manifest."""
        out = workdir / "bench"
        assert main([*self.BASE, "--out", str(out)]) == 0
        assert (out / "benchmark_scenario1.csv").exists()
        assert (out / "summary.csv").exists()
        manifest = json.loads(manifest_path(out).read_text())
        assert manifest["config"]["benchmark"]["replicates"] == 1

    @pytest.mark.slow
    @pytest.mark.timeout(600)
    def test_thread_count_does_not_change_results(self, workdir):
        """Test that --threads 2 writes the same metrics as --threads 1."""
        for threads in ("1", "2"):
            argv = [*self.BASE, "--replicates", "2", "--threads", threads, "--out", str(workdir / f"t{threads}")]
            assert main(argv) == 0
        one = (workdir / "t1" / "benchmark_scenario1.csv").read_bytes()
        two = (workdir / "t2" / "benchmark_scenario1.csv").read_bytes()
        assert one == two
