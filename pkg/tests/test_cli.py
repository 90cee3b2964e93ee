from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from vqlslab import cli
from vqlslab.matrix_market import read_matrix_market, write_matrix_market, write_vector
from vqlslab.numerics import SingularMatrixError

HEADERS = {
    "solve_runs.csv": "family,n,layers,kind,seed,best_cost,cosine,evaluations,reason",
    "solve_summary.csv": "family,n,layers,kind,repeats,cosine_mean,cosine_std,cost_mean,cost_std,evaluations_mean,evaluations_std",
    "variance.csv": "n,layers,kind,component,samples,mean,variance,se,se_variance",
    "fit.csv": "kind,layers,slope,intercept,r2",
    "resources.csv": "family,n,circuit,gate_kind,mean_count,mean_depth",
    "budget.csv": "kind,L,n,denominator_tests,numerator_tests,total",
    "lcu.csv": "string,coefficient_real,coefficient_imag",
}


def run(*argv):
    return cli.main([str(a) for a in argv])


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


def test_gen_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("gen", "--family", "random-pauli", "--n", 3, "--seed", 4, "--out-dir", tmp_path / d) == 0
    assert files(tmp_path / "a") == files(tmp_path / "b")
    a = read_matrix_market(tmp_path / "a" / "matrix.mtx")
    assert a.shape == (8, 8)
    assert json.loads((tmp_path / "a" / "instance.json").read_text())["family"] == "random-pauli"


def test_print_budget(tmp_path, capsys):
    assert run("resources", "--print-budget", "--L", 4, "--out-dir", tmp_path) == 0
    assert "total=14" in capsys.readouterr().out
    assert (tmp_path / "budget.csv").read_text().splitlines()[1] == "global,4,1,6,8,14"


@pytest.mark.parametrize(
    "argv",
    [
        ("solve", "--family", "ising", "--n", 1),
        ("solve", "--family", "banded", "--size", 8),
        ("gen",),
        ("gen", "--family", "nope"),
        ("gen", "--family", "matrix", "--matrix", "missing.mtx", "--rhs", "missing.txt"),
        ("solve", "--family", "ising", "--n", 2, "--repeats", 0),
        ("barren", "--family", "ising", "--samples", 1),
    ],
)
def test_configuration_errors_exit_2(tmp_path, argv):
    assert run(*argv, "--out-dir", tmp_path) == 2


def test_bad_config_file_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "ising", "n": 2, "bogus": 1}))
    assert run("gen", "--config", cfg, "--out-dir", tmp_path) == 2
    cfg.write_text("[1, 2]")
    assert run("gen", "--config", cfg, "--out-dir", tmp_path) == 2
    assert run("rerun", cfg, "--out-dir", tmp_path) == 2


def test_malformed_matrix_exits_2(tmp_path):
    (tmp_path / "a.mtx").write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1\n")
    write_vector(tmp_path / "b.txt", [1.0, 1.0])
    assert run("gen", "--family", "matrix", "--matrix", tmp_path / "a.mtx", "--rhs", tmp_path / "b.txt", "--out-dir", tmp_path) == 2


def test_numerical_failure_exits_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SingularMatrixError("denominator vanished")

    monkeypatch.setattr(cli, "run_jobs", boom)
    assert run("solve", "--family", "ising", "--n", 2, "--repeats", 1, "--out-dir", tmp_path) == 3


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "ising", "n": 3}))
    assert run("gen", "--config", cfg, "--out-dir", tmp_path / "o") == 0
    assert json.loads((tmp_path / "o" / "instance.json").read_text())["n"] == 3


def test_matrix_ingestion(tmp_path):
    rng = np.random.default_rng(0)
    m = rng.normal(size=(6, 6))
    full = np.zeros((8, 8))
    full[:6, :6] = m + m.T
    full[6:, 6:] = np.eye(2)
    write_matrix_market(tmp_path / "a.mtx", full, symmetric=True)
    write_vector(tmp_path / "b.txt", rng.normal(size=8))
    argv = ["gen", "--family", "matrix", "--matrix", tmp_path / "a.mtx", "--rhs", tmp_path / "b.txt"]
    assert run(*argv, "--block-rows", "0:6", "--block-cols", "0:6", "--out-dir", tmp_path / "o") == 0
    meta = json.loads((tmp_path / "o" / "instance.json").read_text())
    assert meta["block_size"] == 6 and meta["padded_size"] == 8 and meta["warnings"] == []


def test_outputs_and_rerun_are_byte_identical(tmp_path):
    first = tmp_path / "first"
    argv = ["solve", "--family", "ising", "--n", 2, "--repeats", 2, "--max-evaluations", 500, "--trajectory"]
    assert run(*argv, "--out-dir", first) == 0
    assert run("barren", "--family", "random-pauli", "--ns", "2,3,4", "--samples", 64, "--norm-scan", 5, "--out-dir", first / "b") == 0
    assert run("resources", "--family", "ising", "--ns", "2,3", "--out-dir", first / "r") == 0
    for sub in (first, first / "b", first / "r"):
        again = tmp_path / "again" / sub.name
        assert run("rerun", sub / "manifest.json", "--out-dir", again) == 0
        a, b = files(sub), files(again)
        csvs = [k for k in a if k.endswith(".csv")]
        assert csvs and all(a[k] == b[k] for k in csvs)
    for d in (first, first / "b", first / "r"):
        for name, header in HEADERS.items():
            if (d / name).exists():
                assert (d / name).read_text().splitlines()[0] == header
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["command"] == "solve" and "out_dir" not in manifest["config"]
    assert "trajectory_layers1_seed1.csv" in manifest["outputs"]


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "vqlslab", "resources", "--print-budget", "--L", "3", "--kind", "local", "--n", "2", "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and "total=15" in r.stdout
