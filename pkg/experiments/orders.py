# experiments/orders.py
"""阶数研究：修正能量的一步缺陷、经典全局收敛阶与 Ψ 的首项展开。"""

from __future__ import annotations

from typing import Callable, Literal, Optional, Sequence

import numpy as np
from loguru import logger

from bea import modified_energy_field, nlse_field
from bea.modified_energy import DEFAULT_EPS_TILDE
from bea.series import DEFAULT_K_MAX, DEFAULT_TOL
from core.errors import ContractViolation
from core.reliability import map_parallel
from lattice import GridSpec, ModelParams, as_state, function_of_laplacian, norm_dx, rescale
from stepper import SolverParams, evolve, midpoint_step, psi_leading_term, psi_map, reference_flow

from .drift import step_count
from .fitting import SlopeEstimate, fit_slope

# 参考流容差的下限（DOP853 的 rtol 下限量级）
MIN_REF_TOL = 1e-14
_FLOOR_FACTOR = 10.0
_MIN_DECADES = 1.5

Comparator = Literal["modified", "original"]


def _defect_floor(solver: SolverParams, ref_tol: float, u0: np.ndarray, grid: GridSpec) -> float:
    return _FLOOR_FACTOR * (solver.fp_tol + ref_tol) * max(1.0, float(norm_dx(grid, u0)))


def _check_sweep(h_values: Sequence[float]) -> np.ndarray:
    h = np.asarray(sorted(h_values, reverse=True), dtype=np.float64)
    if h.size < 4 or np.any(h <= 0):
        raise ContractViolation(f"步长扫描需要至少 4 个正步长，收到 {list(h_values)}")
    decades = float(np.log10(h[0] / h[-1]))
    if decades < _MIN_DECADES:
        logger.warning("步长扫描只覆盖 {:.2f} 个数量级（建议 ≥ {}）", decades, _MIN_DECADES)
    return h


def one_step_defect(
    grid: GridSpec,
    params: ModelParams,
    solver: SolverParams,
    u0: np.ndarray,
    N: int,
    ref_tol: float,
    *,
    against: Comparator = "modified",
    eps_tilde: float = DEFAULT_EPS_TILDE,
    tol: float = DEFAULT_TOL,
    k_max: int = DEFAULT_K_MAX,
) -> float:
    """‖φ_h(u0) − Φ^h_H(u0)‖_δx，H 为修正能量 H_h^{(N)}（或原能量）。"""
    h = solver.h
    if against == "modified":
        field = modified_energy_field(grid, params, h, N, eps_tilde, tol, k_max)
    elif against == "original":
        field = nlse_field(grid, params)
    else:
        raise ContractViolation(f"未知的对照能量 '{against}'")
    numerical, _ = midpoint_step(grid, params, solver, u0)
    exact = reference_flow(field, u0, h, ref_tol)
    return float(norm_dx(grid, numerical - exact))


def _with_tight_reference(sweep: Callable[[float], list[float]], ref_tol: float) -> tuple[float, list[float]]:
    """参考流容差不高于最小缺陷的 1/100，必要时收紧后重算一次。"""
    defects = sweep(ref_tol)
    required = min(defects) / 100.0
    if ref_tol > required and required > MIN_REF_TOL:
        logger.info("参考流容差 {:.1e} 高于最小缺陷的 1/100，收紧到 {:.1e} 重算", ref_tol, required)
        ref_tol = required
        defects = sweep(ref_tol)
    return ref_tol, defects


def defect_order(
    grid: GridSpec,
    params: ModelParams,
    u0,
    h_values: Sequence[float],
    N: int,
    *,
    solver: Optional[SolverParams] = None,
    against: Comparator = "modified",
    eps_tilde: float = DEFAULT_EPS_TILDE,
    tol: float = DEFAULT_TOL,
    k_max: int = DEFAULT_K_MAX,
) -> SlopeEstimate:
    """一步缺陷随 h 的 log-log 斜率。

    对修正能量 N 阶，O(h^{N+2}) 是对格点一致的上界，只在 hλ_max = O(1) 时取到；
    固定格点且 hλ_max 较小时，N = 0 观测到的斜率约为 3。振幅方向的次数见 `defect_amplitude_degree`。
    """
    u0 = as_state(grid, u0)
    steps = _check_sweep(h_values)
    base = solver or SolverParams(h=float(steps[0]))

    def sweep(ref_tol: float) -> list[float]:
        def defect_at(h: float) -> float:
            return one_step_defect(
                grid, params, base.with_step(float(h)), u0, N, ref_tol,
                against=against, eps_tilde=eps_tilde, tol=tol, k_max=k_max,
            )

        return map_parallel("defect_order", defect_at, list(steps))

    ref_tol, defects = _with_tight_reference(sweep, base.ref_tol)
    estimate = fit_slope(steps, defects, _defect_floor(base, ref_tol, u0, grid))
    logger.success("缺陷阶 N={} ({}): slope={:.3f}, r²={:.4f}", N, against, estimate.slope, estimate.r_squared)
    return estimate


def defect_amplitude_degree(
    grid: GridSpec,
    params: ModelParams,
    solver: SolverParams,
    u0,
    radii: Sequence[float],
    N: int,
    *,
    against: Comparator = "modified",
    eps_tilde: float = DEFAULT_EPS_TILDE,
    tol: float = DEFAULT_TOL,
    k_max: int = DEFAULT_K_MAX,
) -> SlopeEstimate:
    """固定 h，把 u0 缩放到各个 ‖u‖_δx = ρ，一步缺陷对 ρ 的 log-log 斜率。

    对修正能量 N 阶期望 2r(N+2)+1。返回值的 `h_values` 字段存放 ρ。
    """
    u0 = as_state(grid, u0)
    scales = _check_sweep(radii)
    h = solver.h

    def sweep(ref_tol: float) -> list[float]:
        def defect_at(radius: float) -> float:
            return one_step_defect(
                grid, params, solver, rescale(grid, u0, float(radius)), N, ref_tol,
                against=against, eps_tilde=eps_tilde, tol=tol, k_max=k_max,
            )

        return map_parallel("defect_amplitude_degree", defect_at, list(scales))

    ref_tol, defects = _with_tight_reference(sweep, solver.ref_tol)
    floor = _FLOOR_FACTOR * (solver.fp_tol + ref_tol) * max(1.0, float(scales[0]))
    estimate = fit_slope(scales, defects, floor)
    logger.success(
        "缺陷的振幅次数 N={} ({}), h={}: slope={:.3f}, r²={:.4f}", N, against, h, estimate.slope, estimate.r_squared
    )
    return estimate


def convergence_order(
    grid: GridSpec,
    params: ModelParams,
    solver: SolverParams,
    u0,
    T: float,
    h_values: Sequence[float],
) -> SlopeEstimate:
    """时间 T 处的全局误差对 h 的斜率。λ=0 时参考解取模态空间的精确解 exp(iTA)u0。"""
    u0 = as_state(grid, u0)
    steps = _check_sweep(h_values)
    if params.is_linear:
        reference = function_of_laplacian(grid, lambda lam: np.exp(1j * T * lam), "exp(iTA)").apply(u0)
    else:
        reference = reference_flow(nlse_field(grid, params), u0, T, solver.ref_tol)

    def error_at(h: float) -> float:
        local = solver.with_step(float(h))
        n_steps = step_count(T, h)
        if abs(n_steps * h - T) > 1e-9 * T:
            raise ContractViolation(f"T={T!r} 不是 h={h!r} 的整数倍")
        final = evolve(grid, params, local, u0, n_steps)
        return float(norm_dx(grid, final - reference))

    errors = map_parallel("convergence_order", error_at, list(steps))
    estimate = fit_slope(steps, errors, _defect_floor(solver, solver.ref_tol, u0, grid))
    logger.success("全局收敛阶: slope={:.3f}, r²={:.4f}", estimate.slope, estimate.r_squared)
    return estimate


def leading_term_slope(
    grid: GridSpec,
    params: ModelParams,
    h: float,
    u,
    eps_values: Sequence[float],
    solver: Optional[SolverParams] = None,
) -> SlopeEstimate:
    """‖(Ψʰ_ε(u) − u)/ε − Ψ_{h,1}(u)‖_δx 对 ε 的斜率（期望 1）。"""
    u = as_state(grid, u)
    eps = _check_sweep(eps_values)
    solver = solver or SolverParams(h=h)
    leading = psi_leading_term(grid, params, h, u)
    defects = []
    for value in eps:
        psi, _ = psi_map(grid, params, h, float(value), u, solver)
        defects.append(float(norm_dx(grid, (psi - u) / value - leading)))
    floor = _FLOOR_FACTOR * solver.fp_tol / float(eps[-1])
    return fit_slope(eps, defects, floor)
