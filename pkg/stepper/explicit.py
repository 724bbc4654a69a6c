# stepper/explicit.py
"""显式对照格式与高精度参考流。"""

from __future__ import annotations

from typing import Callable

import numpy as np
from loguru import logger
from scipy.integrate import solve_ivp

from core.errors import StiffnessError
from lattice import GridSpec, ModelParams, apply_laplacian, as_state, nonlinearity

from .midpoint import SolverParams, StepDiagnostics

# scipy 会把低于 100·eps 的 rtol 抬高并告警，这里提前截断
_MIN_RTOL = 100.0 * np.finfo(np.float64).eps


def nlse_rhs(grid: GridSpec, params: ModelParams, u: np.ndarray) -> np.ndarray:
    """du/dt = iAu + i·f(u)。"""
    return 1j * (apply_laplacian(grid, u) + nonlinearity(params, u))


def rk2_explicit_step(grid: GridSpec, params: ModelParams, h: float, u) -> np.ndarray:
    """两级二阶显式 Runge–Kutta（Heun）一步，非辛、不保持质量。"""
    u = as_state(grid, u)
    k1 = nlse_rhs(grid, params, u)
    k2 = nlse_rhs(grid, params, u + h * k1)
    return u + 0.5 * h * (k1 + k2)


def rk2_stepper(
    grid: GridSpec, params: ModelParams, solver: SolverParams, u
) -> tuple[np.ndarray, StepDiagnostics]:
    """与 `midpoint_step` 同签名的 RK2 包装，便于在研究中替换推进器。"""
    return rk2_explicit_step(grid, params, solver.h, u), StepDiagnostics(0, 0.0, True, 0.0)


def reference_flow(field: Callable[[np.ndarray], np.ndarray], u, t: float, ref_tol: float) -> np.ndarray:
    """以 DOP853 嵌入对高精度积分 du/dt = field(u) 到时间 t。

    `field` 可以是任意可调用的向量场（例如 FieldOperator）。t = 0 时返回输入的副本。
    """
    u = np.asarray(u, dtype=np.complex128)
    if t == 0:
        return u.copy()
    scale = float(np.max(np.abs(u))) if u.size else 0.0
    rtol = max(ref_tol, _MIN_RTOL)
    atol = ref_tol * (scale if scale > 0 else 1.0)

    solution = solve_ivp(
        lambda _t, y: field(y),
        (0.0, float(t)),
        u,
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if solution.status == -1:
        logger.error("参考流积分失败: {}", solution.message)
        raise StiffnessError(float(solution.t[-1]), solution.message)
    logger.trace("参考流完成: {} 次右端求值", solution.nfev)
    return solution.y[:, -1]
