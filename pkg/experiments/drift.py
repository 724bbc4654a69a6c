# experiments/drift.py
"""质量、能量与修正能量沿中点法轨迹的漂移。"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from loguru import logger

from bea import CflSpec, check_cfl, modified_energy
from bea.modified_energy import DEFAULT_EPS_TILDE
from bea.series import DEFAULT_K_MAX, DEFAULT_TOL
from core.errors import CflViolation, ContractViolation, NlseLabError, NoConvergence, StudyAborted
from lattice import GridSpec, ModelParams, as_state, energy, mass, norm_dx
from stepper import SolverParams, StepDiagnostics, StepFunction, evolve, midpoint_step


@dataclass(frozen=True)
class EnergyReport:
    step: int
    time: float
    mass: float
    norm_dx: float
    energy_H: float
    energy_mod: tuple[float, ...]
    healthy: bool = True


@dataclass
class DriftRun:
    """一次漂移研究的结果。`orders` 只包含满足 CFL 条件、实际计算了的修正能量阶。

    推进器不收敛时 `healthy` 置为 False 且不再恢复；失败步记为一条全 NaN 的不健康记录，
    `failed_step` 为其步号。
    """

    reports: list[EnergyReport]
    orders: tuple[int, ...]
    dropped: tuple[int, ...] = ()
    healthy: bool = True
    failed_step: Optional[int] = None
    diagnostics: list[StepDiagnostics] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        if name.startswith("energy_mod_N"):
            position = self.orders.index(int(name.removeprefix("energy_mod_N")))
            return np.array([report.energy_mod[position] for report in self.reports])
        return np.array([getattr(report, name) for report in self.reports])

    def mark_failed(self, index: int, h: float) -> None:
        self.healthy = False
        self.failed_step = index
        nan = float("nan")
        self.reports.append(
            EnergyReport(index, index * h, nan, nan, nan, tuple(nan for _ in self.orders), healthy=False)
        )

    def max_drift(self, name: str) -> float:
        """只在健康记录上计算。"""
        mask = np.array([report.healthy for report in self.reports])
        values = self.column(name)[mask]
        return float(np.max(np.abs(values - values[0])))


def admissible_orders(
    grid: GridSpec, params: ModelParams, h: float, orders: Iterable[int], eps_tilde: float = DEFAULT_EPS_TILDE
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """把请求的修正能量阶分成 (满足 CFL 的, 被丢弃的)。"""
    kept, dropped = [], []
    for N in sorted(set(orders)):
        try:
            check_cfl(h, grid.delta_x, CflSpec(N, params.r, eps_tilde))
        except CflViolation as exc:
            logger.warning("丢弃 energy_mod_N{} 列: {}", N, exc)
            dropped.append(N)
        else:
            kept.append(N)
    return tuple(kept), tuple(dropped)


def step_count(T: float, h: float) -> int:
    steps = int(round(T / h))
    if steps < 1:
        raise ContractViolation(f"T={T!r} 小于一个时间步 h={h!r}")
    return steps


def drift_study(
    grid: GridSpec,
    params: ModelParams,
    solver: SolverParams,
    u0,
    T: float,
    orders: Iterable[int] = (0,),
    *,
    eps_tilde: float = DEFAULT_EPS_TILDE,
    stride: int = 1,
    tol: float = DEFAULT_TOL,
    k_max: int = DEFAULT_K_MAX,
    step: StepFunction = midpoint_step,
) -> DriftRun:
    """推进到时间 T，每 `stride` 步记录一次全部守恒量与修正能量。

    推进器不收敛时把运行标记为不健康并返回此前的记录。

    Raises:
        StudyAborted: 推进器的其他错误，携带失败的步号和此前的记录。
    """
    h = solver.h
    if not h > 0:
        raise ContractViolation(f"漂移研究需要 h > 0，收到 {h!r}")
    if stride < 1:
        raise ContractViolation(f"stride 必须是正整数，收到 {stride!r}")
    n_steps = step_count(T, h)
    kept, dropped = admissible_orders(grid, params, h, orders, eps_tilde)
    run = DriftRun([], kept, dropped)

    def record(index: int, u: np.ndarray) -> None:
        run.reports.append(
            EnergyReport(
                step=index,
                time=index * h,
                mass=float(mass(grid, u)),
                norm_dx=float(norm_dx(grid, u)),
                energy_H=float(energy(grid, params, u)),
                energy_mod=tuple(modified_energy(grid, params, h, N, u, eps_tilde, tol, k_max) for N in kept),
            )
        )

    u0 = as_state(grid, u0)
    record(0, u0)
    last_step = 0

    def on_step(index: int, u: np.ndarray, diagnostics: StepDiagnostics) -> None:
        nonlocal last_step
        last_step = index
        run.diagnostics.append(diagnostics)
        if index % stride == 0 or index == n_steps:
            record(index, u)

    logger.info("漂移研究: {} 步, h={}, 修正能量阶 {}", n_steps, h, list(kept))
    try:
        evolve(grid, params, solver, u0, n_steps, on_step, step)
    except NoConvergence as exc:
        run.mark_failed(last_step + 1, h)
        logger.error("漂移研究在第 {} 步不收敛，返回 {} 条健康记录: {}", last_step + 1, len(run.reports) - 1, exc)
        return run
    except NlseLabError as exc:
        run.healthy = False
        logger.error("漂移研究在第 {} 步中止: {}", last_step + 1, exc)
        raise StudyAborted(last_step + 1, exc, run.reports) from exc

    logger.success("漂移研究完成: 质量最大漂移 {:.3e}", run.max_drift("mass"))
    return run


def drift_halves(run: DriftRun, name: str) -> tuple[float, float]:
    """max|E(t) − E(0)| 分别在 [0, T/2] 与 [T/2, T] 上的值。"""
    mask = np.array([report.healthy for report in run.reports])
    values = run.column(name)[mask]
    times = run.column("time")[mask]
    middle = times[-1] / 2.0
    offsets = np.abs(values - values[0])
    return float(np.max(offsets[times <= middle])), float(np.max(offsets[times >= middle]))


def energy_columns(orders: Sequence[int]) -> list[str]:
    return ["step", "time", "mass", "norm_dx", "energy_H"] + [f"energy_mod_N{N}" for N in orders]
