# stepper/midpoint.py
"""隐式中点法及其分裂形式。

中点法
    u¹ = u + (ih/2)A(u¹ + u) + ih·f((u¹ + u)/2)
可以写成 u¹ = R(hA)·Ψʰ_h(u)，其中 Ψʰ_ε(u) 是映射
    F(v) = u + iε(1 + ihA/2)⁻¹ f((u + R(hA)v)/2)
的不动点。本模块用 Picard 迭代（可选 Anderson 加速）求这个不动点，
收敛性用 ‖·‖_δx 度量。
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from loguru import logger

from core.errors import ContractViolation, NoConvergence
from lattice import (
    GridSpec,
    ModelParams,
    apply_laplacian,
    as_state,
    cayley_resolvent,
    nonlinearity,
    norm_dx,
    propagator,
)

# 舍入下限：容差不低于 64·eps·‖u‖_δx
_ROUNDING_FACTOR = 64.0 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class SolverParams:
    """时间步与不动点/参考流的容差。h 为负时表示向后推进一步。"""

    h: float
    fp_tol: float = 1e-13
    max_iters: int = 200
    ref_tol: float = 1e-12
    accelerate: bool = False
    anderson_depth: int = 5

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h) and self.h != 0):
            raise ContractViolation(f"h 必须是非零有限数，收到 {self.h!r}")
        if not self.fp_tol > 0:
            raise ContractViolation(f"fp_tol 必须为正，收到 {self.fp_tol!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ContractViolation(f"max_iters 必须是正整数，收到 {self.max_iters!r}")
        if not self.ref_tol > 0:
            raise ContractViolation(f"ref_tol 必须为正，收到 {self.ref_tol!r}")
        if self.anderson_depth < 1:
            raise ContractViolation(f"anderson_depth 必须是正整数，收到 {self.anderson_depth!r}")

    def with_step(self, h: float) -> "SolverParams":
        return replace(self, h=h)


@dataclass(frozen=True)
class StepDiagnostics:
    iterations: int
    final_residual: float
    converged: bool
    tolerance: float


def effective_tolerance(grid: GridSpec, solver: SolverParams, u: np.ndarray) -> float:
    return max(solver.fp_tol, _ROUNDING_FACTOR * float(norm_dx(grid, u)))


def _anderson_update(
    f_value: np.ndarray,
    residual: np.ndarray,
    delta_f: deque,
    delta_g: deque,
) -> np.ndarray:
    # 最小二乘系数取实数：在 (Re, Im) 拼接的实向量上求解
    stacked = np.stack([np.concatenate([d.real, d.imag]) for d in delta_g], axis=1)
    target = np.concatenate([residual.real, residual.imag])
    gamma, *_ = np.linalg.lstsq(stacked, target, rcond=None)
    return f_value - sum(g * d for g, d in zip(gamma, delta_f))


def solve_fixed_point(
    grid: GridSpec,
    fixed_map: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    solver: SolverParams,
    tolerance: float,
) -> tuple[np.ndarray, StepDiagnostics]:
    """迭代 v ← F(v) 直到 ‖F(v) − v‖_δx ≤ tolerance，返回最后一次的 F(v)。"""
    v = start
    delta_f: deque = deque(maxlen=solver.anderson_depth)
    delta_g: deque = deque(maxlen=solver.anderson_depth)
    previous: Optional[tuple[np.ndarray, np.ndarray]] = None
    residual_norm = math.inf

    for iteration in range(1, solver.max_iters + 1):
        f_value = fixed_map(v)
        residual = f_value - v
        residual_norm = float(norm_dx(grid, residual))
        if not math.isfinite(residual_norm):
            logger.warning("不动点迭代在第 {} 次出现非有限残差", iteration)
            raise NoConvergence(iteration, residual_norm, tolerance)
        if residual_norm <= tolerance:
            logger.trace("不动点迭代收敛: {} 次, 残差 {:.3e}", iteration, residual_norm)
            return f_value, StepDiagnostics(iteration, residual_norm, True, tolerance)

        if not solver.accelerate:
            v = f_value
            continue
        if previous is not None:
            delta_f.append(f_value - previous[0])
            delta_g.append(residual - previous[1])
        previous = (f_value, residual)
        v = _anderson_update(f_value, residual, delta_f, delta_g) if delta_g else f_value

    logger.debug(
        "不动点迭代在 {} 次后仍未收敛，残差 {:.3e} > {:.3e}",
        solver.max_iters,
        residual_norm,
        tolerance,
    )
    raise NoConvergence(solver.max_iters, residual_norm, tolerance)


_DEFAULT_SOLVER = SolverParams(h=1.0)


def psi_map(
    grid: GridSpec,
    params: ModelParams,
    h: float,
    eps: float,
    u,
    solver: SolverParams | None = None,
) -> tuple[np.ndarray, StepDiagnostics]:
    """Ψʰ_ε(u)：F_{ε,h,u} 的不动点。容差取自 `solver`（其中的 h 不参与计算）。"""
    u = as_state(grid, u)
    solver = solver or _DEFAULT_SOLVER
    rotation = propagator(grid, float(h))
    resolvent = cayley_resolvent(grid, float(h), "+")

    def fixed_map(v: np.ndarray) -> np.ndarray:
        return u + 1j * eps * resolvent.apply(nonlinearity(params, 0.5 * (u + rotation.apply(v))))

    return solve_fixed_point(grid, fixed_map, u, solver, effective_tolerance(grid, solver, u))


def midpoint_step(
    grid: GridSpec, params: ModelParams, solver: SolverParams, u
) -> tuple[np.ndarray, StepDiagnostics]:
    """一步隐式中点法：u¹ = R(hA)·Ψʰ_h(u)。"""
    v, diagnostics = psi_map(grid, params, solver.h, solver.h, u, solver)
    return propagator(grid, float(solver.h)).apply(v), diagnostics


def midpoint_step_direct(
    grid: GridSpec, params: ModelParams, solver: SolverParams, u
) -> tuple[np.ndarray, StepDiagnostics]:
    """不经分裂形式的中点法一步：对中点 m = (u + u¹)/2 迭代
        m = (1 − ihA/2)⁻¹(u + (ih/2)f(m))，
    再取 u¹ = 2m − u。用作分裂形式的独立对照。
    """
    u = as_state(grid, u)
    resolvent = cayley_resolvent(grid, float(solver.h), "-")
    base = resolvent.apply(u)

    def fixed_map(m: np.ndarray) -> np.ndarray:
        return base + resolvent.apply(0.5j * solver.h * nonlinearity(params, m))

    middle, diagnostics = solve_fixed_point(grid, fixed_map, base, solver, effective_tolerance(grid, solver, u))
    return 2.0 * middle - u, diagnostics


def implicit_residual(grid: GridSpec, params: ModelParams, h: float, u, u_next) -> float:
    """中点法隐式方程的残差 ‖u¹ − u − (ih/2)A(u¹+u) − ih·f((u¹+u)/2)‖_δx。"""
    u = as_state(grid, u)
    u_next = as_state(grid, u_next, "u_next")
    total = u_next + u
    defect = u_next - u - 0.5j * h * apply_laplacian(grid, total) - 1j * h * nonlinearity(params, 0.5 * total)
    return float(norm_dx(grid, defect))


def leading_term_map(grid: GridSpec, params: ModelParams, h: float, u):
    """Ψ_{h,1}(u) = iλ(1 + ihA/2)⁻¹(|w|^{2r}w)，w = (1 − ihA/2)⁻¹u。

    不做输入校验，可直接作用在 Taylor 射流上。
    """
    w = cayley_resolvent(grid, float(h), "-").apply(u)
    return cayley_resolvent(grid, float(h), "+").apply(1j * nonlinearity(params, w))


def psi_leading_term(grid: GridSpec, params: ModelParams, h: float, u) -> np.ndarray:
    return leading_term_map(grid, params, h, as_state(grid, u))


StepFunction = Callable[[GridSpec, ModelParams, SolverParams, np.ndarray], tuple[np.ndarray, StepDiagnostics]]
StepCallback = Callable[[int, np.ndarray, StepDiagnostics], None]


def evolve(
    grid: GridSpec,
    params: ModelParams,
    solver: SolverParams,
    u0,
    n_steps: int,
    callback: StepCallback | None = None,
    step: StepFunction = midpoint_step,
) -> np.ndarray:
    """推进 n_steps 步，每步之后调用 callback(step_index, state, diagnostics)。

    推进器抛出的异常原样传出，由调用方决定如何记录中止位置。
    """
    u = as_state(grid, u0).copy()
    for index in range(1, n_steps + 1):
        u, diagnostics = step(grid, params, solver, u)
        if callback is not None:
            callback(index, u, diagnostics)
    return u
