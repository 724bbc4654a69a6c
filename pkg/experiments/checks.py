# experiments/checks.py
"""结构性检查：辛性、分裂形式等价、谱对照、CFL 边界探针与范数扫描。"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from bea import CflSpec, cfl_max_step, z_field
from bea.modified_energy import DEFAULT_EPS_TILDE
from bea.series import BERNOULLI_MAX, DEFAULT_TOL
from core.errors import ContractViolation, NonDecayingSeries
from core.reliability import map_parallel
from lattice import (
    GridSpec,
    ModelParams,
    algebra_constant,
    as_state,
    dense_eigenvalues,
    from_real,
    interpolant_h1_norm,
    laplacian_eigenvalues,
    norm_dx,
    random_state,
    to_real,
)
from stepper import SolverParams, StepFunction, implicit_residual, midpoint_step, midpoint_step_direct

SYMPLECTIC_MAX_K = 8


def symplecticity_check(
    grid: GridSpec,
    params: ModelParams,
    solver: SolverParams,
    u,
    fd_step: float = 1e-5,
    step: StepFunction = midpoint_step,
) -> float:
    """一步映射在 (p, q) 坐标下的中心差分 Jacobian M，返回 max|MᵀJM − J|。"""
    if grid.K > SYMPLECTIC_MAX_K:
        raise ContractViolation(f"稠密 Jacobian 仅支持 K ≤ {SYMPLECTIC_MAX_K}，收到 K={grid.K}")
    if not fd_step > 0:
        raise ContractViolation(f"fd_step 必须为正，收到 {fd_step!r}")
    x = to_real(as_state(grid, u))
    dim = x.size
    jacobian = np.empty((dim, dim))
    for column in range(dim):
        offset = np.zeros(dim)
        offset[column] = fd_step
        forward, _ = step(grid, params, solver, from_real(x + offset))
        backward, _ = step(grid, params, solver, from_real(x - offset))
        jacobian[:, column] = (to_real(forward) - to_real(backward)) / (2.0 * fd_step)

    half = dim // 2
    structure = np.block([[np.zeros((half, half)), np.eye(half)], [-np.eye(half), np.zeros((half, half))]])
    deviation = float(np.max(np.abs(jacobian.T @ structure @ jacobian - structure)))
    logger.debug("辛性偏差 ({}): {:.3e}", getattr(step, "__name__", "step"), deviation)
    return deviation


@dataclass(frozen=True)
class SplitCheck:
    deviation: float
    residual: float


def split_equivalence(
    grid: GridSpec, params: ModelParams, solver: SolverParams, states: Sequence[np.ndarray]
) -> list[SplitCheck]:
    """分裂形式 R(hA)Ψʰ_h(u) 与直接求解中点的结果之差，以及隐式方程残差。"""
    checks = []
    for u in states:
        split, _ = midpoint_step(grid, params, solver, u)
        direct, _ = midpoint_step_direct(grid, params, solver, u)
        checks.append(
            SplitCheck(
                deviation=float(norm_dx(grid, split - direct)),
                residual=implicit_residual(grid, params, solver.h, u, split),
            )
        )
    return checks


@dataclass(frozen=True)
class SpectrumRow:
    j: int
    lambda_analytic: float
    lambda_dense: float
    abs_diff: float


def spectrum_check(K: int, delta_x: float) -> list[SpectrumRow]:
    """解析特征值与稠密三对角求解器的逐项对照（均为升序）。"""
    grid = GridSpec(K, delta_x)
    analytic = laplacian_eigenvalues(grid)
    dense = dense_eigenvalues(grid)
    rows = [
        SpectrumRow(j + 1, float(a), float(d), float(abs(a - d)))
        for j, (a, d) in enumerate(zip(analytic, dense))
    ]
    logger.info("谱对照 K={}: 最大偏差 {:.3e}", K, max(row.abs_diff for row in rows))
    return rows


@dataclass(frozen=True)
class CflProbe:
    """`truncations` 中 None 表示该状态上级数不衰减（发散或 k_max 内未达到容差）。"""

    h: float
    h_max: float
    non_decaying: bool
    failures: int
    truncations: tuple[Optional[int], ...]

    @property
    def ratio(self) -> float:
        return self.h / self.h_max


def cfl_boundary_probe(
    grid: GridSpec,
    params: ModelParams,
    h: float,
    states: Sequence[np.ndarray],
    *,
    N: int = 0,
    eps_tilde: float = DEFAULT_EPS_TILDE,
    tol: float = DEFAULT_TOL,
    k_max: int = BERNOULLI_MAX,
) -> CflProbe:
    """在每个探针状态上求 Z(1,0)，统计 ad 级数不衰减的次数（不预先检查 CFL）。"""
    h_max = cfl_max_step(grid.delta_x, CflSpec(N, params.r, eps_tilde))
    field = z_field(grid, params, h, 1, 0, tol, k_max)
    truncations: list[Optional[int]] = []
    for u in states:
        try:
            evaluation = field.resolve(as_state(grid, u))
        except NonDecayingSeries as exc:
            logger.debug("探针状态上 ad 级数发散: k={}", exc.k)
            truncations.append(None)
            continue
        truncations.append(evaluation.truncation if evaluation.converged else None)
    failures = sum(1 for k in truncations if k is None)
    logger.info("CFL 探针 h={:.4g} (h/h_max={:.2f}): {}/{} 个状态不衰减", h, h / h_max, failures, len(states))
    return CflProbe(h, h_max, failures > 0, failures, tuple(truncations))


@dataclass(frozen=True)
class SweepRow:
    K: int
    delta_x: float
    low: float
    high: float


def _sweep(
    name: str, K_values: Sequence[int], extent: float, samples: int, seed: int, measure
) -> list[SweepRow]:
    def one(K: int) -> SweepRow:
        grid = GridSpec(K, extent / K)
        rng = np.random.Generator(np.random.PCG64([seed, K]))
        values = [measure(grid, rng) for _ in range(samples)]
        return SweepRow(K, grid.delta_x, float(min(values)), float(max(values)))

    return map_parallel(name, one, list(K_values))


def algebra_constant_sweep(
    K_values: Sequence[int] = (8, 16, 32, 64, 128),
    extent: float = 4.0,
    samples: int = 64,
    seed: int = 0,
) -> list[SweepRow]:
    """固定 X = Kδx，统计 ‖u∘v‖_δx/(‖u‖_δx‖v‖_δx) 的范围。"""

    def measure(grid: GridSpec, rng: np.random.Generator) -> float:
        return algebra_constant(grid, random_state(grid, rng), random_state(grid, rng))

    return _sweep("algebra_constant_sweep", K_values, extent, samples, seed, measure)


def norm_equivalence_sweep(
    K_values: Sequence[int] = (8, 16, 32, 64, 128),
    extent: float = 4.0,
    samples: int = 64,
    seed: int = 0,
) -> list[SweepRow]:
    """固定 X = Kδx，统计 ‖u‖_δx 与插值函数 H¹ 范数之比的范围。"""

    def measure(grid: GridSpec, rng: np.random.Generator) -> float:
        u = random_state(grid, rng)
        return float(norm_dx(grid, u)) / interpolant_h1_norm(grid, u)

    return _sweep("norm_equivalence_sweep", K_values, extent, samples, seed, measure)
