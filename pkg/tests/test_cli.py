import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fairsc.cli import load_config, main, read_table
from fairsc.datasets import load_edge_list, load_feature_csv
from fairsc.errors import ValidationError

SMALL = ["--n", "60", "--k", "3", "--repetitions", "2", "--dataset", "msbm"]


def _csv_rows(path):
    with open(path, encoding="utf-8") as fh:
        lines = [l for l in fh if not l.startswith("#")]
    return list(csv.DictReader(lines))


def test_generate_msbm_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["generate", "--dataset", "msbm", "--n", "100", "--k", "4", "--seed", "7",
                     "-o", str(d)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    meta = json.loads(next(a.glob("*.json")).read_text())
    assert meta["seed"] == 7 and "p_within" in meta
    bundle = load_edge_list(next(a.glob("*.edges")), next(a.glob("*.groups")))
    assert bundle.n == 100


def test_generate_elliptical(tmp_path):
    assert main(["generate", "--dataset", "elliptical", "--n", "90", "-o", str(tmp_path)]) == 0
    bundle = load_feature_csv(next(tmp_path.glob("*.csv")), "group")
    assert bundle.points.shape == (90, 2)
    assert set(np.unique(bundle.group_labels).tolist()) == {0, 1}


def test_generate_rejects_loader(tmp_path):
    assert main(["generate", "--dataset", "csv", "-o", str(tmp_path)]) == 2


def test_cluster_writes_outputs(tmp_path, capsys):
    assert main(["cluster", *SMALL, "-o", str(tmp_path)]) == 0
    for name in ("config.json", "runs.csv", "metrics.csv", "summary.csv", "trace.jsonl"):
        assert (tmp_path / name).exists()
    conf, rows = read_table(tmp_path / "runs.csv")
    assert conf["k"] == 3 and "output" not in conf
    assert len(rows) == 6 and {r["solver"] for r in rows} == {"ofsc", "sfsc", "admm"}
    for r in rows:
        assert r["status"] == "ok"
        assert 0.0 <= float(r["average_balance"]) <= 1.0
    metric_cols = _csv_rows(tmp_path / "metrics.csv")[0].keys()
    assert "wall_time_s" not in metric_cols and "clustering_cost" in metric_cols
    traces = [json.loads(l) for l in (tmp_path / "trace.jsonl").read_text().splitlines()]
    assert traces and all(t["solver"] == "admm" for t in traces)
    summary = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert {s["solver"] for s in summary} == {"ofsc", "sfsc", "admm"}


def test_metrics_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["cluster", *SMALL, "--seed", "3", "-o", str(tmp_path / d)]) == 0
    assert (tmp_path / "a/metrics.csv").read_bytes() == (tmp_path / "b/metrics.csv").read_bytes()


def test_sweep_alpha(tmp_path):
    assert main(["sweep-alpha", *SMALL, "--alphas", "0.01,0.1", "-o", str(tmp_path)]) == 0
    rows = _csv_rows(tmp_path / "runs.csv")
    assert len(rows) == 4
    assert sorted({float(r["alpha0"]) for r in rows}) == [0.01, 0.1]
    assert len(_csv_rows(tmp_path / "summary.csv")) == 2


def test_scaling_cells(tmp_path):
    assert main(["scaling", "--dataset", "msbm", "--n-list", "40,60", "--k-list", "2,3",
                 "--repetitions", "1", "-o", str(tmp_path)]) == 0
    cells = _csv_rows(tmp_path / "scaling.csv")
    assert len(cells) == 12
    assert all(float(c["wall_time_median"]) > 0 for c in cells)


def test_failed_run_exit_code(tmp_path):
    code = main(["cluster", "--dataset", "randlaplace", "--n", "10", "--k", "10",
                 "--repetitions", "1", "--solvers", "ofsc", "-o", str(tmp_path)])
    assert code == 1
    rows = _csv_rows(tmp_path / "runs.csv")
    assert rows[0]["status"] == "error" and rows[0]["error"]


def test_bad_config_exit_code(tmp_path, capsys):
    assert main(["cluster", "--solvers", "kmeans", "-o", str(tmp_path)]) == 2
    assert "unknown solvers" in capsys.readouterr().err


class TestConfig:
    def test_precedence(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("k: 4\nseed: 2\ndataset:\n  n: 300\nsolver:\n  T: 7\n"
                        "  lbfgs:\n    gtol: 1e-4\n")
        cfg = load_config(path, ["seed=5", "dataset.h=3"], {"k": 6, "seed": None})
        assert cfg.k == 6 and cfg.seed == 5 and cfg.dataset.n == 300 and cfg.dataset.h == 3
        sc = cfg.solver_config(cfg.seed)
        assert sc.T == 7 and sc.lbfgs.gtol == 1e-4

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("dataset:\n  colour: red\n")
        with pytest.raises(ValidationError):
            load_config(path)

    def test_bad_solver_setting(self):
        with pytest.raises(ValidationError):
            load_config(None, ["solver.alpha0=1.5"])

    def test_set_needs_equals(self):
        with pytest.raises(ValidationError):
            load_config(None, ["k"])


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "fairsc", "--version"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and out.stdout.strip().endswith("0.1.0")
