import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from greenbvp.cli import EXIT_CONFIG, EXIT_OK, EXIT_PROBLEM, EXIT_VERIFY, main


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(tmp_path, cmd, doc, *extra):
    out = tmp_path / "out"
    return main([cmd, "--config", write(tmp_path, doc), "--out", str(out), *extra]), out


def test_build_mixed(tmp_path, capsys):
    code, out = run(tmp_path, "build", {"problem": {"preset": "mixed", "M": 1.0}})
    assert code == EXIT_OK
    summary = json.loads((out / "build.json").read_text())
    assert summary["witness"]["sign"] == "negative"
    assert summary["classification"]["0"] == "N"
    assert summary["jump_max_error"] < 1e-6
    assert json.loads(capsys.readouterr().out) == summary


def test_build_eigenvalue_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "build", {"problem": {"preset": "mixed", "M": np.pi**2 / 4}})
    assert code == EXIT_PROBLEM
    assert "eigenvalue" in capsys.readouterr().err


def test_build_samples_match_min(tmp_path):
    code, out = run(tmp_path, "build", {"problem": {"preset": "mixed", "k": 1, "M": 0.0},
                                        "build": {"grid": 6, "l": [0, 1]}})
    assert code == EXIT_OK
    with open(out / "kernel_samples.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "s", "l", "value"]
    vals = [r for r in rows if r["l"] == "0"]
    assert len(vals) == 36
    for r in vals:
        assert abs(float(r["value"]) + min(float(r["t"]), float(r["s"]))) < 1e-10


def test_verify_passes(tmp_path, capsys):
    code, out = run(tmp_path, "verify", {"problem": {"preset": "mixed"}, "verify": {"M0": -1.0, "M1": 1.0}},
                    "--threads", "2")
    assert code == EXIT_OK
    reports = json.loads((out / "residuals.json").read_text())
    assert len(reports) == 11 and all(r["max_abs"] <= 1e-6 for r in reports)
    header = (out / "residuals.csv").read_text().splitlines()[0]
    assert header == "identity,t,s,residual"


def test_verify_equal_parameters(tmp_path):
    code, out = run(tmp_path, "verify", {"problem": {"preset": "mixed"}, "verify": {"M0": 1.0, "M1": 1.0}})
    assert code == EXIT_OK
    assert all(r["max_abs"] <= 1e-12 for r in json.loads((out / "residuals.json").read_text()))


def test_verify_failure_exit_code(tmp_path):
    doc = {"problem": {"preset": "mixed"}, "verify": {"M0": -1.0, "M1": 1.0, "bound": 1e-30},
           "quadrature": {"panels": 1, "nodes": 2}}
    code, _ = run(tmp_path, "verify", doc)
    assert code == EXIT_VERIFY


def test_verify_mismatched_k(tmp_path, capsys):
    doc = {"problem": {"preset": "mixed"}, "verify": {"M0": 0.0, "M1": 1.0, "k0": 0, "k1": 1}}
    code, out = run(tmp_path, "verify", doc)
    assert code == EXIT_PROBLEM and "usage error" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize("doc", [
    {"problem": {"preset": "mixed"}, "bogus": 1},
    {"problem": {"preset": "mixed", "extra": 1}},
    {"problem": {"preset": "mixed"}, "tol": -1.0},
    {"problem": {"n": 2}},
    {},
])
def test_config_errors(tmp_path, doc, capsys):
    code, _ = run(tmp_path, "build", doc)
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    assert main(["build", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["build", "--config", str(bad)]) == EXIT_CONFIG


def test_invalid_problem(tmp_path):
    doc = {"problem": {"n": 2, "interval": [0, 1], "coefficients": [0, 0], "k": 0,
                       "alpha": [[0, 0], [0, 0]], "beta": [[0, 0], [0, 1]]}}
    code, _ = run(tmp_path, "build", doc)
    assert code == EXIT_PROBLEM


def test_sweep_outputs_deterministic(tmp_path):
    doc = {"problem": {"preset": "mixed"}, "sweep": {"M_range": [-10.0, 20.0], "M_points": 24}}
    code, out = run(tmp_path, "sweep", doc, "--svg", "--threads", "3")
    assert code == EXIT_OK
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    code, _ = run(tmp_path, "sweep", doc, "--svg")
    again = {p.name: p.read_bytes() for p in out.iterdir()}
    assert set(first) == {"sweep.json", "sweep.csv", "sweep.svg"}
    assert first == again
    rep = json.loads(first["sweep.json"])
    assert abs(rep["intervals"]["0"]["N"][0]["upper"] - np.pi**2 / 4) < 1e-4
    assert len(rep["eigenvalues"]) == 1


def test_sweep_mixed_k1(tmp_path):
    doc = {"problem": {"preset": "mixed", "k": 1}, "sweep": {"M_range": [-5.0, 5.0], "M_points": 11}}
    code, out = run(tmp_path, "sweep", doc)
    rep = json.loads((out / "sweep.json").read_text())
    assert code == EXIT_OK and rep["eigenvalues"] == []
    assert set(rep["classes"]["0"]) == {"N"}


def test_sweep_empty_grid(tmp_path, capsys):
    doc = {"problem": {"preset": "mixed"}, "sweep": {"M": []}}
    code, _ = run(tmp_path, "sweep", doc)
    assert code == EXIT_PROBLEM and "usage error" in capsys.readouterr().err


def test_eig_and_plot(tmp_path):
    doc = {"problem": {"preset": "dirichlet"}, "eig": {"bracket": [0.0, 50.0]}}
    code, out = run(tmp_path, "eig", doc, "--svg")
    assert code == EXIT_OK
    ev = json.loads((out / "eig.json").read_text())["eigenvalues"]
    np.testing.assert_allclose(ev, [np.pi**2, 4 * np.pi**2], atol=1e-8)
    assert (out / "determinant.svg").read_text().startswith("<?xml")


def test_h_op(tmp_path):
    doc = {"problem": {"preset": "mixed", "coefficients": [0, {"type": "poly", "coeffs": [1, 1]}]},
           "h_op": {"l": 1, "s": 0.4}}
    code, out = run(tmp_path, "h-op", doc)
    assert code == EXIT_OK
    res = json.loads((out / "h_op.json").read_text())
    assert res["branches"] == ["nonzero"] and res["max_residual"] < 1e-6
    with open(out / "h_op.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "b_0", "b_1", "b_2"]
    t = float(rows[3][0])
    assert abs(float(rows[3][2]) + 1 / (1 + t)) < 1e-12


def test_h_op_hypothesis_violation(tmp_path):
    doc = {"problem": {"preset": "mixed", "coefficients": [0, {"type": "poly", "coeffs": [-0.5, 1]}]},
           "h_op": {"l": 1}}
    code, _ = run(tmp_path, "h-op", doc)
    assert code == EXIT_PROBLEM


def test_tol_override(tmp_path):
    code, out = run(tmp_path, "build", {"problem": {"preset": "mixed", "M": 1.0}}, "--tol", "1e-9")
    assert code == EXIT_OK
    assert main(["build", "--config", write(tmp_path, {"problem": {"preset": "mixed"}}), "--tol", "0"]) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, {"problem": {"preset": "mixed", "M": 1.0}})
    proc = subprocess.run([sys.executable, "-m", "greenbvp", "build", "--config", cfg,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
