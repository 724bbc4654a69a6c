import csv
import json
import math
import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

import main as entrypoint
from cli import EXIT_ASSERTION, EXIT_ERROR, EXIT_OK, Command, parse_config, run
from cli.runner import format_value
from core.errors import ConfigError, NoConvergence
from experiments import drift as drift_module


def _read_csv(path):
    with path.open(newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


# --- 配置解析 ---

def test_parse_config_text_with_defaults():
    config = parse_config("command=cfl K=16 delta_x=0.25 r=1 N=0")
    assert config.command is Command.CFL
    assert config.K == 16 and config.delta_x == 0.25 and config.N == 0
    assert config.fp_tol == 1e-13
    assert config.ref_tol == 1e-12
    assert config.eps_tilde == pytest.approx(math.pi / 2)
    assert config.seed == 0


def test_parse_config_multiline_with_comments():
    text = "command=drift  # 漂移研究\nK=8 delta_x=0.25\nr=1 lambda=-1\nh=0.01 T=1\n"
    config = parse_config(text)
    assert config.lam == -1
    assert config.model().lam == -1


def test_non_positive_step_names_the_key():
    with pytest.raises(ConfigError) as excinfo:
        parse_config("command=simulate K=4 delta_x=0.25 r=1 T=1 h=-0.1")
    assert excinfo.value.key == "h"


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError) as excinfo:
        parse_config("command=cfl delta_x=1 r=1 N=0 foo=1")
    assert excinfo.value.key == "foo"


def test_missing_required_key_is_reported():
    with pytest.raises(ConfigError) as excinfo:
        parse_config("command=simulate K=4")
    assert excinfo.value.key == "delta_x"
    with pytest.raises(ConfigError) as excinfo:
        parse_config("K=4 delta_x=0.25")
    assert excinfo.value.key == "command"


def test_invalid_lambda_is_rejected():
    with pytest.raises(ConfigError) as excinfo:
        parse_config("command=spectrum-check K=4 delta_x=0.25 lambda=2")
    assert excinfo.value.key == "lambda"


def test_h_values_are_comma_separated():
    config = parse_config("command=defect-order K=16 delta_x=0.5 r=1 N=0 h_values=0.02,0.01,0.005,0.0025")
    assert config.h_values == [0.02, 0.01, 0.005, 0.0025]
    with pytest.raises(ConfigError) as excinfo:
        parse_config("command=defect-order K=16 delta_x=0.5 r=1 N=0 h_values=0.02,-0.01")
    assert excinfo.value.key == "h_values"


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("command=symplectic-check\nK=4 delta_x=0.25 r=1\nh=0.02\n", encoding="utf-8")
    config = parse_config(["--config", str(path), "--h", "0.01", "--max-iters=50"])
    assert config.command is Command.SYMPLECTIC_CHECK
    assert config.h == 0.01
    assert config.max_iters == 50


def test_positional_command_and_stray_arguments():
    config = parse_config(["cfl", "--delta_x", "1", "--r", "1", "--N", "0"])
    assert config.command is Command.CFL
    with pytest.raises(ConfigError):
        parse_config(["cfl", "--delta_x", "1", "extra"])


def test_format_value():
    assert format_value(3) == "3"
    assert format_value(0.1) == "0.1"
    assert format_value(True) == "true"


# --- 运行与输出 ---

def test_cfl_command_writes_table_and_manifest(tmp_path):
    outdir = tmp_path / "cfl"
    config = parse_config(["cfl", "--delta_x", "1", "--r", "1", "--N", "0", "--outdir", str(outdir)])
    assert run(config) == EXIT_OK
    rows = _read_csv(outdir / "cfl.csv")
    assert rows[0] == ["delta_x", "r", "N", "eps_tilde", "h_max"]
    assert float(rows[1][4]) == pytest.approx(0.267949, abs=1e-6)

    manifest = json.loads((outdir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "cfl"
    assert manifest["rng"] == "numpy.PCG64"
    assert manifest["inputs"]["delta_x"] == 1.0
    assert "fp_tol" in manifest["tolerances"]


def test_spectrum_check_command(tmp_path):
    outdir = tmp_path / "spectrum"
    config = parse_config(["spectrum-check", "--K", "16", "--delta_x", "0.25", "--outdir", str(outdir)])
    assert run(config) == EXIT_OK
    rows = _read_csv(outdir / "spectrum.csv")
    assert rows[0] == ["j", "lambda_analytic", "lambda_dense", "abs_diff"]
    assert len(rows) == 34
    assert max(float(row[3]) for row in rows[1:]) <= 1e-10


def _drift_args(outdir):
    return [
        "drift", "--K", "8", "--delta_x", "0.25", "--r", "1", "--lambda", "0",
        "--h", "0.005", "--T", "0.5", "--N", "1", "--stride", "10", "--outdir", str(outdir),
    ]


def test_linear_drift_command(tmp_path):
    outdir = tmp_path / "drift"
    assert run(parse_config(_drift_args(outdir))) == EXIT_OK
    rows = _read_csv(outdir / "drift.csv")
    assert rows[0] == ["step", "time", "mass", "norm_dx", "energy_H", "energy_mod_N0", "energy_mod_N1"]
    columns = list(zip(*(map(float, row) for row in rows[1:])))
    for values in columns[2:]:
        assert max(abs(value - values[0]) for value in values) <= 1e-10


def test_runs_are_byte_reproducible(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert run(parse_config(_drift_args(first))) == EXIT_OK
    assert run(parse_config(_drift_args(second))) == EXIT_OK
    for name in ("drift.csv", "manifest.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_manifest_rerun_reproduces_outputs(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    args = [
        "simulate", "--K", "4", "--delta_x", "0.25", "--r", "1", "--lambda", "1", "--h", "0.01", "--T", "0.05",
        "--init", "noise", "--seed", "7", "--outdir", str(first),
    ]
    assert run(parse_config(args)) == EXIT_OK
    rerun = parse_config(["--manifest", str(first / "manifest.json"), "--outdir", str(second)])
    assert rerun.command is Command.SIMULATE
    assert rerun.seed == 7 and rerun.init == "noise"
    assert run(rerun) == EXIT_OK
    for name in ("trajectory.csv", "manifest.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_manifest_values_yield_to_flags(tmp_path):
    outdir = tmp_path / "cfl"
    assert run(parse_config(["cfl", "--delta_x", "1", "--r", "1", "--N", "0", "--outdir", str(outdir)])) == EXIT_OK
    config = parse_config(["--manifest", str(outdir / "manifest.json"), "--N", "1"])
    assert config.N == 1 and config.delta_x == 1.0
    with pytest.raises(ConfigError) as excinfo:
        parse_config(["--manifest", str(outdir / "cfl.csv")])
    assert excinfo.value.key == "manifest"


def test_non_empty_outdir_is_refused(tmp_path):
    outdir = tmp_path / "busy"
    outdir.mkdir()
    (outdir / "keep.txt").write_text("x", encoding="utf-8")
    config = parse_config(["cfl", "--delta_x", "1", "--r", "1", "--N", "0", "--outdir", str(outdir)])
    assert run(config) == EXIT_ERROR
    assert sorted(path.name for path in outdir.iterdir()) == ["keep.txt"]


def test_missing_outdir_is_an_error():
    assert run(parse_config(["cfl", "--delta_x", "1", "--r", "1", "--N", "0"])) == EXIT_ERROR


def test_stability_failure_exit_code(tmp_path):
    outdir = tmp_path / "stability"
    args = [
        "stability", "--K", "4", "--delta_x", "0.25", "--r", "1", "--h", "0.01",
        "--epsilon", "2", "--kappa", "0.25", "--N", "0", "--horizon_cap", "10", "--outdir", str(outdir),
    ]
    assert run(parse_config(args)) == EXIT_ASSERTION
    rows = _read_csv(outdir / "stability.csv")
    assert rows[0] == ["step", "time", "norm_dx", "ratio"]
    manifest = json.loads((outdir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["outputs"]["verdict"] == "FAIL"


def test_solver_failure_keeps_partial_drift_records(tmp_path, monkeypatch):
    def failing(*_args, **_kwargs):
        raise NoConvergence(200, 1.0, 1e-13)

    monkeypatch.setattr(drift_module, "evolve", failing)
    outdir = tmp_path / "drift"
    assert run(parse_config(_drift_args(outdir))) == EXIT_ERROR
    rows = _read_csv(outdir / "drift.csv")
    assert [row[0] for row in rows[1:]] == ["0", "1"]
    assert rows[2][2] == "nan"
    manifest = json.loads((outdir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["outputs"]["healthy"] is False
    assert manifest["outputs"]["failed_step"] == 1


def test_symplectic_check_command(tmp_path):
    outdir = tmp_path / "symplectic"
    args = ["symplectic-check", "--K", "4", "--delta_x", "0.25", "--r", "1", "--h", "0.01", "--outdir", str(outdir)]
    assert run(parse_config(args)) == EXIT_OK
    rows = _read_csv(outdir / "symplectic.csv")
    assert rows[0] == ["scheme", "deviation"]
    deviations = {row[0]: float(row[1]) for row in rows[1:]}
    assert deviations["midpoint"] <= 1e-6
    assert deviations["rk2"] >= 1e-4


# --- 入口 ---

def test_main_usage_and_help(capsys):
    assert entrypoint.main([]) == EXIT_ERROR
    assert entrypoint.main(["--help"]) == EXIT_OK
    assert "用法" in capsys.readouterr().out


def test_main_runs_command(tmp_path):
    outdir = tmp_path / "out"
    assert entrypoint.main(["cfl", "--delta_x", "0.1", "--r", "1", "--N", "0", "--outdir", str(outdir)]) == EXIT_OK
    assert (outdir / "cfl.csv").exists()
    assert entrypoint.main(["cfl", "--delta_x", "-1", "--r", "1", "--N", "0", "--outdir", str(tmp_path / "bad")]) == EXIT_ERROR


@pytest.mark.skipif(shutil.which("bash") is None, reason="需要 bash")
def test_wrapper_script_resolves_paths_from_caller(tmp_path):
    script = Path(entrypoint.__file__).resolve().parent / "scripts" / "nlselab"
    (tmp_path / "runs").mkdir()
    (tmp_path / "runs" / "cfl.cfg").write_text("delta_x=1 r=1 N=0\n", encoding="utf-8")
    completed = subprocess.run(
        ["bash", str(script), "cfl", "--config", "runs/cfl.cfg", "--outdir", "out/cfl"],
        cwd=tmp_path,
        env={**os.environ, "PYTHON": sys.executable},
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert completed.returncode == EXIT_OK, completed.stderr
    rows = _read_csv(tmp_path / "out" / "cfl" / "cfl.csv")
    assert float(rows[1][4]) == pytest.approx(0.267949, abs=1e-6)
