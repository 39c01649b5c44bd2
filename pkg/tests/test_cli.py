import csv
import json
import re

import numpy as np
import pytest

from dpsynth.accountant import AccountingParams, compose_and_convert
from dpsynth.cli import run_command
from dpsynth.dataset_io import read_synthetic


def csv_fixture(tmp_path, n_per_class=25, k=2, d=4, seed=11, name="train.csv"):
    rng = np.random.default_rng(seed)
    path = tmp_path / name
    with open(path, "w") as f:
        f.write(",".join([f"x{j}" for j in range(d)] + ["label"]) + "\n")
        for klass in range(k):
            for _ in range(n_per_class):
                row = rng.normal(loc=2.0 * klass, size=d)
                f.write(",".join(f"{v:.6f}" for v in row) + f",{klass}\n")
    return path


class TestAccountCommand:
    def test_spec_example_prints_epsilon(self, capsys):
        code = run_command([
            "account", "--n", "60000", "--t", "60000", "--l", "4", "--c", "1.0",
            "--sigma-x", "0.3", "--sigma-y", "0.3", "--delta", "1e-5",
        ])
        out = capsys.readouterr().out
        assert code == 0
        direct = compose_and_convert(
            AccountingParams(l=4, c=1.0, sigma_x=0.3, sigma_y=0.3, n=60000, t=60000)
        )
        shown = float(re.search(r"epsilon = ([0-9.e+-]+)", out).group(1))
        assert shown == pytest.approx(direct.epsilon, rel=1e-5)
        assert f"alpha* = {direct.alpha_star}" in out

    def test_report_written_with_manifest(self, tmp_path, capsys):
        out_path = tmp_path / "report.json"
        code = run_command([
            "account", "--n", "1000", "--t", "1000", "--l", "2",
            "--sigma-x", "1.0", "--sigma-y", "1.0", "--alpha-max", "16",
            "--out", str(out_path),
        ])
        assert code == 0
        report = json.loads(out_path.read_text())
        assert report["alpha_star"] is not None
        manifest = json.loads((tmp_path / "report.json.manifest.json").read_text())
        assert manifest["command"] == "account"

    def test_unknown_flag_exits_one(self, capsys):
        code = run_command(["account", "--nope", "1"])
        assert code == 1
        assert "no such option" in capsys.readouterr().err.lower()

    def test_validation_error_exits_one(self, capsys):
        code = run_command([
            "account", "--n", "50", "--t", "10", "--l", "100",
            "--sigma-x", "1.0", "--sigma-y", "1.0",
        ])
        assert code == 1

    def test_precision_failure_exits_two(self, capsys):
        code = run_command([
            "account", "--n", "60000", "--t", "60000", "--l", "1",
            "--sigma-x", "1.7e145", "--sigma-y", "1.7e145", "--alpha-max", "512",
        ])
        assert code == 2
        assert "precision" in capsys.readouterr().err.lower()

    def test_io_error_exits_three(self, tmp_path, capsys):
        code = run_command([
            "account", "--n", "100", "--t", "100", "--l", "2",
            "--sigma-x", "1.0", "--sigma-y", "1.0", "--alpha-max", "8",
            "--out", str(tmp_path / "missing_dir" / "report.json"),
        ])
        assert code == 3


class TestCalibrateCommand:
    def test_round_trip_with_account(self, capsys):
        code = run_command([
            "calibrate", "--target-epsilon", "10", "--delta", "1e-5", "--l", "4",
            "--n", "60000", "--t", "60000", "--ratio", "1.0", "--alpha-max", "64",
        ])
        assert code == 0
        out = capsys.readouterr().out
        sigma = float(re.search(r"sigma_x = ([0-9.e+-]+)", out).group(1))
        code = run_command([
            "account", "--n", "60000", "--t", "60000", "--l", "4",
            "--sigma-x", str(sigma), "--sigma-y", str(sigma), "--alpha-max", "64",
        ])
        assert code == 0
        eps = float(re.search(r"epsilon = ([0-9.e+-]+)", capsys.readouterr().out).group(1))
        assert eps == pytest.approx(10.0, abs=0.01)


class TestSynthesizeCommand:
    def test_end_to_end_with_manifest(self, tmp_path, capsys):
        src = csv_fixture(tmp_path)
        out = tmp_path / "synth.dpcd"
        code = run_command([
            "synthesize", "--input", str(src), "--format", "csv",
            "--label-column", "label", "--l", "2", "--t", "20",
            "--sigma-x", "0.3", "--sigma-y", "0.3", "--seed", "42",
            "--alpha-max", "32", "--out", str(out),
        ])
        assert code == 0
        ds = read_synthetic(out)
        assert ds.t == 20
        assert ds.metadata["accounting"]["epsilon"] is not None
        manifest = json.loads((tmp_path / "synth.dpcd.manifest.json").read_text())
        # the embedded report recomputes to the same epsilon
        p = manifest["privacy_report"]["params"]
        recomputed = compose_and_convert(
            AccountingParams(
                l=p["l"], c=p["c"], sigma_x=p["sigma_x"], sigma_y=p["sigma_y"],
                n=p["n"], t=p["t"], delta=p["delta"], alpha_max=p["alpha_max"],
                p_mode=p["p_mode"], min_class_count=p["min_class_count"],
            )
        )
        assert recomputed.epsilon == manifest["privacy_report"]["epsilon"]

    def test_identical_argv_identical_outputs(self, tmp_path):
        src = csv_fixture(tmp_path)
        argv = lambda out: [
            "synthesize", "--input", str(src), "--format", "csv",
            "--label-column", "label", "--l", "2", "--t", "16",
            "--sigma-x", "0.2", "--sigma-y", "0.2", "--seed", "9",
            "--alpha-max", "16", "--out", str(out),
        ]
        out_a, out_b = tmp_path / "a.dpcd", tmp_path / "b.dpcd"
        assert run_command(argv(out_a)) == 0
        assert run_command(argv(out_b)) == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        ma = json.loads((tmp_path / "a.dpcd.manifest.json").read_text())
        mb = json.loads((tmp_path / "b.dpcd.manifest.json").read_text())
        for m in (ma, mb):
            m.pop("started_at")
            m.pop("duration_seconds")
            m["parameters"].pop("out_path")
            m["output_paths"] = []
        assert ma == mb

    def test_insufficient_class_size_message(self, tmp_path, capsys):
        src = csv_fixture(tmp_path, n_per_class=3)
        code = run_command([
            "synthesize", "--input", str(src), "--format", "csv",
            "--label-column", "label", "--l", "10", "--t", "10",
            "--sigma-x", "0.1", "--sigma-y", "0.1", "--seed", "1",
            "--out", str(tmp_path / "x.dpcd"),
        ])
        assert code == 1
        assert "insufficient class size" in capsys.readouterr().err

    def test_seed_required(self, tmp_path, capsys):
        src = csv_fixture(tmp_path)
        code = run_command([
            "synthesize", "--input", str(src), "--format", "csv",
            "--l", "2", "--t", "10", "--sigma-x", "0.1", "--sigma-y", "0.1",
            "--out", str(tmp_path / "x.dpcd"),
        ])
        assert code == 1
        assert "--seed" in capsys.readouterr().err

    def test_epsilon_mode(self, tmp_path, capsys):
        src = csv_fixture(tmp_path)
        out = tmp_path / "synth.dpcd"
        code = run_command([
            "synthesize", "--input", str(src), "--format", "csv",
            "--label-column", "label", "--l", "2", "--t", "20",
            "--epsilon", "800", "--ratio", "1.0", "--seed", "5",
            "--alpha-max", "32", "--out", str(out),
        ])
        assert code == 0
        meta = read_synthetic(out).metadata
        assert meta["accounting"]["epsilon"] == pytest.approx(800.0, rel=1e-3)


class TestSweepCommand:
    def test_csv_header_and_rows(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run_command([
            "sweep", "--n", "60000", "--t", "60000", "--ls", "2,4",
            "--sigmas", "0.3,0.9", "--alpha-max", "16", "--out", str(out),
        ])
        assert code == 0
        with open(out) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["l", "sigma_x", "sigma_y", "alpha_star", "epsilon", "status"]
        assert len(rows) == 5
        assert all(r[5] == "ok" for r in rows[1:])

    def test_log_spaced_grid(self, tmp_path, capsys):
        code = run_command([
            "sweep", "--n", "1000", "--t", "100", "--ls", "2",
            "--sigma-min", "0.5", "--sigma-max", "2.0", "--sigma-count", "3",
            "--alpha-max", "8",
        ])
        assert code == 0
        assert "3 cells evaluated" in capsys.readouterr().out

    def test_conflicting_grid_flags(self, capsys):
        code = run_command([
            "sweep", "--n", "1000", "--t", "100", "--ls", "2",
            "--sigmas", "0.5", "--sigma-min", "0.1",
        ])
        assert code == 1


class TestPreviewCommand:
    def test_pgm_from_container(self, tmp_path, capsys):
        src = csv_fixture(tmp_path, d=16)
        out = tmp_path / "synth.dpcd"
        assert run_command([
            "synthesize", "--input", str(src), "--format", "csv",
            "--label-column", "label", "--l", "2", "--t", "8",
            "--sigma-x", "0.1", "--sigma-y", "0.1", "--seed", "2",
            "--alpha-max", "16", "--out", str(out),
        ]) == 0
        img = tmp_path / "grid.pgm"
        code = run_command([
            "preview", "--input", str(out), "--out", str(img),
            "--rows", "2", "--cols", "4", "--cell-height", "4", "--cell-width", "4",
        ])
        assert code == 0
        assert img.read_bytes().startswith(b"P5\n16 8\n255\n")
        assert (tmp_path / "grid.pgm.manifest.json").exists()


class TestCompareCommand:
    def test_prints_both_epsilons(self, capsys):
        code = run_command([
            "compare", "--n", "60000", "--t", "60000", "--l", "4",
            "--sigma-x", "0.3", "--sigma-y", "0.3", "--alpha-max", "32",
            "--d-x", "784", "--d-y", "10",
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "tighter" in out
        ours = float(re.search(r"this analysis\)\s+= ([0-9.e+-]+)", out).group(1))
        baseline = float(re.search(r"dimension baseline\)\s+= ([0-9.e+-]+)", out).group(1))
        assert ours < baseline
