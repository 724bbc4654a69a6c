# cli/runner.py
"""命令分发与输出目录的原子写入。

每个命令返回若干 CSV 表、可选的 JSON 附件和一个退出码。所有文件先写入
输出目录旁边的临时目录，全部成功后再整体改名到位，因此失败的运行不会留下输出。
"""

from __future__ import annotations

import csv
import io
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from numbers import Integral
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from loguru import logger

from bea import cfl_max_step
from core.errors import ConfigError, NlseLabError
from core.reliability import ResilienceError, run_with_resilience
from experiments import (
    build_manifest,
    convergence_order,
    defect_order,
    drift_halves,
    drift_study,
    energy_columns,
    longtime_stability,
    make_initial_state,
    make_rng,
    spectrum_check,
    symplecticity_check,
)
from stepper import rk2_stepper

from .models import Command, RunConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ASSERTION = 2
SPECTRUM_TOLERANCE = 1e-10


@dataclass
class Table:
    header: Sequence[str]
    rows: Iterable[Sequence[Any]]


@dataclass
class StudyOutput:
    tables: dict[str, Table] = field(default_factory=dict)
    attachments: dict[str, Any] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    status: int = EXIT_OK


def format_value(value: Any) -> str:
    """整数原样输出，浮点数输出最短的可往返十进制表示。"""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, Integral):
        return str(int(value))
    if isinstance(value, float) or hasattr(value, "dtype"):
        return repr(float(value))
    return str(value)


def render_csv(table: Table) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()


def render_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# --- 各命令 ---

def _initial_state(config: RunConfig):
    return make_initial_state(config.init, config.grid(), make_rng(config.seed), config.init_scale)


def _drift_output(config: RunConfig, orders: Sequence[int], filename: str, probe: bool) -> StudyOutput:
    run = drift_study(
        config.grid(), config.model(), config.solver(), _initial_state(config), config.T, orders,
        eps_tilde=config.eps_tilde, stride=config.stride,
    )
    rows = ([r.step, r.time, r.mass, r.norm_dx, r.energy_H, *r.energy_mod] for r in run.reports)
    summary: dict[str, Any] = {
        "orders": list(run.orders),
        "dropped_orders": list(run.dropped),
        "healthy": run.healthy,
        "failed_step": run.failed_step,
        "max_drift": {name: run.max_drift(name) for name in energy_columns(run.orders)[2:]},
    }
    if probe and 0 in run.orders:
        first, second = drift_halves(run, "energy_mod_N0")
        summary["energy_mod_N0_halves"] = [first, second]
    status = EXIT_OK if run.healthy else EXIT_ERROR
    return StudyOutput({filename: Table(energy_columns(run.orders), rows)}, summary=summary, status=status)


def _simulate(config: RunConfig) -> StudyOutput:
    return _drift_output(config, (0,), "trajectory.csv", probe=False)


def _drift(config: RunConfig) -> StudyOutput:
    top = 1 if config.N is None else config.N
    return _drift_output(config, range(top + 1), "drift.csv", probe=True)


def _slope_output(estimate, filename: str) -> StudyOutput:
    rows = zip(estimate.h_values, estimate.defect_values)
    return StudyOutput(
        {filename: Table(["h", "defect"], rows)},
        attachments={"slope.json": estimate.as_dict()},
        summary={"slope": estimate.slope, "r_squared": estimate.r_squared},
    )


def _defect_order(config: RunConfig) -> StudyOutput:
    solver = config.solver(h=max(config.h_values))
    estimate = defect_order(
        config.grid(), config.model(), _initial_state(config), config.h_values, config.N,
        solver=solver, eps_tilde=config.eps_tilde,
    )
    return _slope_output(estimate, "defect.csv")


def _convergence(config: RunConfig) -> StudyOutput:
    solver = config.solver(h=max(config.h_values))
    estimate = convergence_order(
        config.grid(), config.model(), solver, _initial_state(config), config.T, config.h_values
    )
    return _slope_output(estimate, "convergence.csv")


def _symplectic_check(config: RunConfig) -> StudyOutput:
    grid, params, solver = config.grid(), config.model(), config.solver()
    u = _initial_state(config)
    midpoint = symplecticity_check(grid, params, solver, u)
    explicit = symplecticity_check(grid, params, solver, u, step=rk2_stepper)
    rows = [["midpoint", midpoint], ["rk2", explicit]]
    return StudyOutput(
        {"symplectic.csv": Table(["scheme", "deviation"], rows)},
        summary={"midpoint": midpoint, "rk2": explicit},
    )


def _stability(config: RunConfig) -> StudyOutput:
    verdict = longtime_stability(
        config.grid(), config.model(), config.solver(), config.epsilon, config.kappa, config.N,
        _initial_state(config), horizon_cap=config.horizon_cap, stride=config.stride, eps_tilde=config.eps_tilde,
    )
    rows = ([r.step, r.time, r.norm_dx, r.ratio] for r in verdict.records)
    summary = {
        "verdict": verdict.label,
        "max_ratio": verdict.max_ratio,
        "steps": verdict.steps,
        "horizon_steps": verdict.horizon_steps,
        "horizon_capped": verdict.horizon_capped,
    }
    status = EXIT_OK if verdict.passed else EXIT_ASSERTION
    return StudyOutput({"stability.csv": Table(["step", "time", "norm_dx", "ratio"], rows)}, summary=summary, status=status)


def _cfl(config: RunConfig) -> StudyOutput:
    h_max = cfl_max_step(config.delta_x, config.cfl_spec())
    row = [config.delta_x, config.r, config.N, config.eps_tilde, h_max]
    return StudyOutput(
        {"cfl.csv": Table(["delta_x", "r", "N", "eps_tilde", "h_max"], [row])},
        summary={"h_max": h_max},
    )


def _spectrum_check(config: RunConfig) -> StudyOutput:
    rows = spectrum_check(config.K, config.delta_x)
    worst = max(row.abs_diff for row in rows)
    status = EXIT_OK if worst <= SPECTRUM_TOLERANCE else EXIT_ASSERTION
    table = Table(
        ["j", "lambda_analytic", "lambda_dense", "abs_diff"],
        [[row.j, row.lambda_analytic, row.lambda_dense, row.abs_diff] for row in rows],
    )
    return StudyOutput({"spectrum.csv": table}, summary={"max_abs_diff": worst}, status=status)


COMMANDS: dict[Command, Callable[[RunConfig], StudyOutput]] = {
    Command.SIMULATE: _simulate,
    Command.DRIFT: _drift,
    Command.DEFECT_ORDER: _defect_order,
    Command.SYMPLECTIC_CHECK: _symplectic_check,
    Command.STABILITY: _stability,
    Command.CFL: _cfl,
    Command.SPECTRUM_CHECK: _spectrum_check,
    Command.CONVERGENCE: _convergence,
}


# --- 输出目录 ---

def _prepare_outdir(outdir: Path | None) -> Path:
    if outdir is None:
        raise ConfigError("outdir", "必须用 --outdir 指定输出目录")
    if outdir.exists() and (not outdir.is_dir() or any(outdir.iterdir())):
        raise ConfigError("outdir", f"{outdir} 已存在且非空")
    return outdir


def _publish(staging: Path, outdir: Path) -> None:
    if outdir.exists():
        outdir.rmdir()
    os.replace(staging, outdir)


def write_outputs(outdir: Path, files: dict[str, str]) -> None:
    """先写入同级临时目录，再整体改名为 outdir；I/O 失败按重试策略重试。"""
    outdir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{outdir.name}.", dir=outdir.parent))
    try:
        for name, content in files.items():
            target = staging / name
            run_with_resilience(
                f"write {name}",
                lambda target=target, content=content: target.write_text(content, encoding="utf-8", newline="\n"),
            )
        run_with_resilience("publish outdir", lambda: _publish(staging, outdir))
    finally:
        if staging.exists():
            shutil.rmtree(staging, ignore_errors=True)


def run(config: RunConfig) -> int:
    """
    执行配置中的命令并写出 manifest.json 与各 CSV。

    Returns:
        0 表示健康完成，2 表示断言式失败（例如稳定性 FAIL），1 表示错误。
    """
    try:
        outdir = _prepare_outdir(config.outdir)
        logger.info(f"▶ 运行命令 '{config.command.value}'，输出目录 {outdir}")
        output = COMMANDS[config.command](config)
    except NlseLabError as exc:
        logger.error(f"命令 '{config.command.value}' 失败: {exc}")
        return EXIT_ERROR

    manifest = build_manifest(
        config.command.value,
        config.inputs(),
        seed=config.seed,
        tolerances={"fp_tol": config.fp_tol, "ref_tol": config.ref_tol, "eps_tilde": config.eps_tilde},
        outputs={**output.summary, "files": sorted([*output.tables, *output.attachments])},
    )
    files = {name: render_csv(table) for name, table in output.tables.items()}
    files.update({name: render_json(payload) for name, payload in output.attachments.items()})
    files["manifest.json"] = render_json(manifest)

    try:
        write_outputs(outdir, files)
    except (ResilienceError, OSError) as exc:
        logger.error(f"写出结果失败: {exc}")
        return EXIT_ERROR

    if output.status == EXIT_OK:
        logger.success(f"✅ 命令 '{config.command.value}' 完成，结果已写入 {outdir}")
    else:
        logger.warning(f"命令 '{config.command.value}' 完成但判定失败（退出码 {output.status}）")
    return output.status
