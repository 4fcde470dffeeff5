"""Golden-file and exit-code tests for the command-line front end.

Set ``FRACSPDE_UPDATE_GOLDEN=1`` to rewrite the golden files after an
intended output change.
"""

import os
import subprocess
import sys
from pathlib import Path

import pytest

from fracspde.cli import EXIT_CERT, EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, main

GOLDEN = Path(__file__).parent / "golden"
UPDATE = os.environ.get("FRACSPDE_UPDATE_GOLDEN") == "1"

CASES = {
    "fbm_scalar.csv": ["fbm", "--hurst", "0.75", "--steps", "64", "--seed", "7"],
    "fbm_modes.tsv": ["fbm", "--modes", "3", "--steps", "32", "--seed", "2", "--format", "tsv"],
    "integrate_sin.csv": ["integrate", "--steps", "256", "--seed", "3", "--integrand", "sin"],
    "integrate_additivity.csv": ["integrate", "--steps", "256", "--seed", "3", "--check", "additivity"],
    "integrate_shift.csv": ["integrate", "--steps", "256", "--seed", "3", "--check", "shift",
                            "--tau", "0.25"],
    "certify_kfun.csv": ["certify", "--only", "kfun"],
    "solve_linear.csv": ["solve", "--problem", "linear", "--steps", "64", "--seed", "1", "--rho", "1",
                         "--oracle", "exp"],
}


def run(argv, tmp_path, name="out.txt"):
    out = tmp_path / name
    code = main(list(argv) + ["--quiet", "-o", str(out)])
    return code, out.read_text() if out.exists() else ""


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, tmp_path):
    code, text = run(CASES[name], tmp_path)
    assert code == EXIT_OK
    path = GOLDEN / name
    if UPDATE:
        path.write_text(text)
    assert text == path.read_text()


def test_reruns_are_byte_identical(tmp_path):
    argv = ["fbm", "--hurst", "0.75", "--steps", "1024", "--horizon", "1", "--seed", "7"]
    _, a = run(argv, tmp_path, "a.csv")
    _, b = run(argv, tmp_path, "b.csv")
    assert a == b
    rows = a.splitlines()
    assert len(rows) == 1026  # header plus 1025 nodes
    assert float(rows[1].split(",")[1]) == 0.0


def test_constant_integrand_prints_increment(tmp_path):
    _, path_csv = run(["fbm", "--steps", "128", "--seed", "5"], tmp_path, "p.csv")
    (tmp_path / "p.csv").write_text(path_csv)
    _, text = run(["integrate", "--path", str(tmp_path / "p.csv"), "--integrand", "one"], tmp_path)
    vals = [float(r.split(",")[1]) for r in path_csv.splitlines()[1:]]
    header, row = text.splitlines()[:2]
    assert header.split(",")[0] == "integral"
    assert float(row.split(",")[0]) == pytest.approx(vals[-1] - vals[0], rel=1e-12)


def test_additivity_and_shift_tables_pass(tmp_path):
    for name in ("integrate_additivity.csv", "integrate_shift.csv"):
        _, text = run(CASES[name], tmp_path)
        assert "FAIL" not in text and "PASS" in text


def test_zero_noise_solve_matches_semigroup(tmp_path):
    _, text = run(["solve", "--problem", "linear", "--sigma", "0", "--steps", "64", "--rho", "1",
                   "--oracle", "semigroup"], tmp_path)
    header = text.splitlines()[0].split(",")
    col = header.index("rel_error")
    assert all(float(r.split(",")[col]) == 0.0 for r in text.splitlines()[1:])


def test_diagnostics_file(tmp_path):
    diag = tmp_path / "diag.txt"
    code, _ = run(["solve", "--problem", "linear", "--steps", "64", "--rho", "1",
                   "--diagnostics", str(diag)], tmp_path)
    assert code == EXIT_OK
    kv = dict(line.split(" = ", 1) for line in diag.read_text().splitlines())
    ratios = [float(x) for x in kv["contraction_ratios"].split()]
    assert kv["converged"] == "True" and ratios and max(ratios) < 1


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nsteps = 16\nseed = 7\nhurst = 0.75\n")
    _, from_cfg = run(["fbm", "--config", str(cfg)], tmp_path, "a.csv")
    _, flags = run(["fbm", "--steps", "16", "--seed", "7"], tmp_path, "b.csv")
    _, override = run(["fbm", "--config", str(cfg), "--steps", "8"], tmp_path, "c.csv")
    assert from_cfg == flags and len(from_cfg.splitlines()) == 18
    assert len(override.splitlines()) == 10


@pytest.mark.parametrize("argv", [
    ["fbm", "--hurst", "1.2"],
    ["fbm", "--steps", "0"],
    ["fbm", "--method", "cholesky", "--steps", "100000"],
    ["integrate", "--integrand", "cube"],
    ["solve", "--alpha", "0.9"],
    ["nosuchcommand"],
])
def test_invalid_input_exit_code(argv, tmp_path, capsys):
    code, _ = run(argv, tmp_path)
    assert code == EXIT_INVALID
    assert capsys.readouterr().err.strip()


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("hurstt = 0.7\n")
    code, _ = run(["fbm", "--config", str(cfg)], tmp_path)
    assert code == EXIT_INVALID


def test_numerical_failure_exit_code(tmp_path):
    code, _ = run(["solve", "--problem", "linear", "--sigma", "400", "--steps", "256", "--rho", "1"],
                  tmp_path)
    assert code == EXIT_NUMERIC


def test_corrupted_constant_fails_certification(tmp_path):
    code, text = run(["certify", "--only", "contraction", "--ct-scale", "1e-3"], tmp_path)
    assert code == EXIT_CERT
    assert any(r.startswith("contraction,") and r.endswith(",FAIL") for r in text.splitlines())


def test_console_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    res = subprocess.run([sys.executable, "-m", "fracspde.cli", "fbm", "--hurst", "0.75",
                          "--steps", "64", "--seed", "7", "-o", str(out), "--quiet"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert out.read_text() == (GOLDEN / "fbm_scalar.csv").read_text()
