# experiments/stability.py
"""小初值的长时间 ‖·‖_δx 稳定性。

判定：从 ‖u⁰‖_δx = ε 出发推进到 n·h = min((h·ε^{2r(1−κ)})^{−N}, 上限)，
全程满足 ‖uⁿ‖_δx ≤ ε^{1−κ} 时为 PASS。上限只能检验理论时间区间的前缀。
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from loguru import logger

from bea import CflSpec, check_cfl
from bea.modified_energy import DEFAULT_EPS_TILDE
from core.errors import ContractViolation, NlseLabError, StudyAborted
from lattice import GridSpec, ModelParams, as_state, norm_dx, rescale
from stepper import SolverParams, StepFunction, midpoint_step

DEFAULT_HORIZON_CAP = 10_000_000


@dataclass(frozen=True)
class StabilityRecord:
    step: int
    time: float
    norm_dx: float
    ratio: float


@dataclass
class StabilityVerdict:
    passed: bool
    epsilon: float
    threshold: float
    max_norm: float
    steps: int
    horizon_steps: int
    horizon_capped: bool
    records: list[StabilityRecord] = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return self.max_norm / self.threshold

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"


def horizon_steps(h: float, epsilon: float, kappa: float, r: int, N: int) -> int:
    """理论时间区间 (h·ε^{2r(1−κ)})^{−N} 对应的步数（向上取整）。"""
    horizon_time = (h * epsilon ** (2 * r * (1 - kappa))) ** (-N)
    return max(1, math.ceil(horizon_time / h))


def longtime_stability(
    grid: GridSpec,
    params: ModelParams,
    solver: SolverParams,
    epsilon: float,
    kappa: float,
    N: int,
    u0,
    *,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
    stride: int = 1,
    eps_tilde: float = DEFAULT_EPS_TILDE,
    step: StepFunction = midpoint_step,
) -> StabilityVerdict:
    """把 u0 缩放到 ‖u0‖_δx = ε 后推进，记录 ‖uⁿ‖_δx/ε^{1−κ}；首次越界即判 FAIL 并停止。

    h 超过 N 阶修正能量的 CFL 上限时在推进前抛出 CflViolation。
    """
    if not epsilon > 0:
        raise ContractViolation(f"epsilon 必须为正，收到 {epsilon!r}")
    if not 0 < kappa < 0.5:
        raise ContractViolation(f"kappa 必须在 (0, 1/2) 内，收到 {kappa!r}")
    if N < 0 or horizon_cap < 1 or stride < 1:
        raise ContractViolation("N 必须非负，horizon_cap 与 stride 必须为正")
    h = solver.h
    if not h > 0:
        raise ContractViolation(f"稳定性研究需要 h > 0，收到 {h!r}")
    check_cfl(h, grid.delta_x, CflSpec(N, params.r, eps_tilde))

    threshold = epsilon ** (1 - kappa)
    full = horizon_steps(h, epsilon, kappa, params.r, N)
    n_steps = min(full, horizon_cap)
    capped = full > horizon_cap
    if capped:
        logger.warning("理论时间区间需要 {} 步，按上限截断为 {} 步", full, horizon_cap)

    u = rescale(grid, as_state(grid, u0), epsilon)
    verdict = StabilityVerdict(True, epsilon, threshold, float(norm_dx(grid, u)), 0, n_steps, capped)
    verdict.records.append(StabilityRecord(0, 0.0, verdict.max_norm, verdict.max_norm / threshold))

    logger.info("长时间稳定性: ε={}, κ={}, N={}, {} 步, 阈值 {:.4g}", epsilon, kappa, N, n_steps, threshold)
    index = 0
    try:
        for index in range(1, n_steps + 1):
            u, _diagnostics = step(grid, params, solver, u)
            size = float(norm_dx(grid, u))
            verdict.max_norm = max(verdict.max_norm, size)
            verdict.steps = index
            if index % stride == 0 or index == n_steps or size > threshold:
                verdict.records.append(StabilityRecord(index, index * h, size, size / threshold))
            if size > threshold:
                verdict.passed = False
                logger.warning("第 {} 步 ‖u‖_δx={:.4g} 超过阈值 {:.4g}", index, size, threshold)
                break
    except NlseLabError as exc:
        logger.error("稳定性研究在第 {} 步中止: {}", index, exc)
        raise StudyAborted(index, exc, verdict.records) from exc

    logger.success("稳定性判定 {}: max ratio {:.4f}", verdict.label, verdict.max_ratio)
    return verdict
