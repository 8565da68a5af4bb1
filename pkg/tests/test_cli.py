import csv
import json
import subprocess
import sys

import pytest

from stfbe.cli import main

SMALL = ["--set", "grid.n_space=64", "--set", "grid.n_time=128", "--set", "run.n_paths=3"]


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema=v1"
    return list(csv.reader(lines[1:]))


def test_ml_eval(tmp_path, capsys):
    code, out = run(tmp_path, "ml", "ml-eval", "--set", "ml.a=1", "--set", "ml.z=[0.0, 1.0]")
    assert code == 0
    rows = read_csv(out / "ml_eval.csv")
    assert rows[0] == ["a", "b", "z", "value"]
    assert float(rows[2][3]) == pytest.approx(2.718281828459045)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "ml-eval"
    assert set(manifest["outputs"]) == {"ml_eval.csv"}
    assert "2.718281828459045" in capsys.readouterr().out


def test_kernel_table(tmp_path):
    code, out = run(tmp_path, "k", "kernel-table", "--set", "kernel.times=[1.0]",
                    "--set", "kernel.radii=[0.0, 1.0]")
    assert code == 0
    assert len(read_csv(out / "kernel_table.csv")) == 3


def test_frac_check(tmp_path):
    code, out = run(tmp_path, "f", "frac-check")
    assert code == 0
    assert all(row[3] == "true" for row in read_csv(out / "frac_check.csv")[1:])


@pytest.mark.parametrize("override,condition", [
    ("orders.beta=1.2", "3*alpha/4"),
    ("grid.n_space=100", "power of two"),
    ("bogus.key=1", "known keys"),
])
def test_invalid_config_exits_2(tmp_path, capsys, override, condition):
    code, out = run(tmp_path, "bad", "simulate", "--set", override)
    assert code == 2
    err = capsys.readouterr().err
    assert "violated" in err and condition in err
    assert not (out / "manifest.json").exists()


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("[1, 2]")
    assert run(tmp_path, "o", "simulate", "--config", str(cfg))[0] == 2
    assert run(tmp_path, "o", "simulate", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_config_file_with_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"ml.a": 2.0, "ml.z": [0.0]}))
    code, out = run(tmp_path, "o", "ml-eval", "--config", str(cfg), "--set", "ml.b=2")
    assert code == 0
    assert read_csv(out / "ml_eval.csv")[1][:2] == ["2.0", "2.0"]


def test_simulate_and_holder(tmp_path, capsys):
    code, out = run(tmp_path, "sim", "simulate", *SMALL, "--seed", "11")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seeds"] == [11, 12, 13]
    assert len(manifest["outputs"]) == 6
    assert read_csv(out / "sup_norm_0000.csv")[0] == ["step", "t", "sup_norm"]
    code = main(["holder", "--input", str(out), "--out", str(tmp_path / "h"),
                 "--set", "holder.min_lag=1", "--set", "holder.n_bootstrap=20"])
    assert code == 0
    rows = read_csv(tmp_path / "h" / "holder_summary.csv")
    assert [r[0] for r in rows[1:]] == ["time", "space"]


def test_holder_without_archives_exits_2(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["holder", "--input", str(tmp_path / "empty"), "--out", str(tmp_path / "h")]) == 2


def test_numerical_failure_exits_3(tmp_path):
    # zero noise and zero data give identically zero paths: degenerate increments
    code, out = run(tmp_path, "z", "simulate", *SMALL, "--set", "sigma.value=0")
    assert code == 0
    code = main(["holder", "--input", str(out), "--out", str(tmp_path / "h"),
                 "--set", "holder.min_lag=1"])
    assert code == 3
    diag = json.loads((tmp_path / "h" / "diagnostics.json").read_text())
    assert diag["error"] == "DomainError"
    assert "degenerate" in diag["message"]


def test_simulate_is_deterministic_across_workers(tmp_path):
    _, a = run(tmp_path, "a", "simulate", *SMALL, "--set", "coeffs.bbar=1.0", "--workers", "1")
    _, b = run(tmp_path, "b", "simulate", *SMALL, "--set", "coeffs.bbar=1.0", "--workers", "2")
    for name in sorted(p.name for p in a.iterdir()):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_scan_beta_small(tmp_path):
    code, out = run(tmp_path, "scan", "scan-beta", "--set", "grid.n_space=32", "--set", "grid.n_time=512",
                    "--set", "orders.alpha=0.9", "--set", "scan.betas=[0.3, 0.7]",
                    "--set", "scan.runs=2", "--set", "holder.n_probes=2")
    assert code == 0
    rows = read_csv(out / "scan_beta.csv")
    assert rows[0] == ["beta", "theory_time", "moment_time", "estimate", "stderr", "flag"]
    assert len(rows) == 3


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stfbe.cli", "ml-eval", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "stfbe.cli", "--version"], capture_output=True, text=True)
    assert "0.1.0" in proc.stdout


def test_heat_simulate_then_holder(tmp_path):
    sim = tmp_path / "heat"
    args = ["--set", "orders.alpha=1.0", "--set", "orders.beta=1.0", "--set", "run.n_paths=64",
            "--set", "grid.box_length=3.141592653589793"]
    assert main(["simulate", *args, "--out", str(sim)]) == 0
    assert main(["holder", *args, "--input", str(sim), "--out", str(tmp_path / "h")]) == 0
    rows = read_csv(tmp_path / "h" / "holder_summary.csv")
    time_row = dict(zip(rows[0], rows[1]))
    assert float(time_row["estimate"]) == pytest.approx(0.25, abs=0.05)
    assert float(time_row["theory"]) == pytest.approx(0.25)
