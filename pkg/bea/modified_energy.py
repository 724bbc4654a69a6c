# bea/modified_energy.py
"""修正能量 H_h^{(N)}（N ∈ {0, 1}）、CFL 条件与剩余项的数值提取。

时间 1 生成元按 h 展开为 Z = Σ_{ℓ,j} h^{ℓ+j} Z_{ℓ,j}，其中
    Z_{0,0} = 2i·arctan(hA/2)，
    Z_{1,0} = ad_series(−Z_{0,0}, R·X_{P₀}∘R*)，
    Z_{1,1} = ad_series(−Z_{0,0}, R·X_{P₁}∘R*)，
    Z_{2,0} = P₀ 的二次项。
时间 h 的场为 Z/h，于是
    X_{H^{(0)}} = X_{A₀} + Z_{1,0}，
    X_{H^{(1)}} = X_{H^{(0)}} + h·(Z_{2,0} + Z_{1,1})。

X_{P₁} 有两个来源：闭式 `p1_field`，或 `ExtractedRemainderField` 的数值拟合。
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from loguru import logger
from scipy.integrate import solve_ivp

from core.errors import (
    ContractViolation,
    CflViolation,
    IllConditionedFit,
    NoConvergence,
    StiffnessError,
    Unsupported,
)
from lattice import (
    GridSpec,
    ModelParams,
    as_state,
    cayley_resolvent,
    nonlinearity,
    norm_dx,
    propagator,
)
from stepper import SolverParams, psi_map, reference_flow

from .fields import FieldOperator, SumField
from .hamiltonians import (
    a0_energy,
    a0_field,
    conjugate_field,
    hamiltonian_from_field,
    p0_field,
    p1_field,
    time_one_generator,
)
from .jets import Jet
from .series import DEFAULT_K_MAX, DEFAULT_TOL, QuadraticSeriesField, ad_series

DEFAULT_EPS_TILDE = math.pi / 2
SUPPORTED_ORDERS = (0, 1)

RemainderSource = Literal["closed_form", "extracted"]
REMAINDER_SOURCES = ("closed_form", "extracted")


@dataclass(frozen=True)
class CflSpec:
    """CFL 条件 h ≤ δx²·tan((π − ε̃)/(2(2r(N+1) + 1))) 的参数。"""

    N: int
    r: int
    eps_tilde: float = DEFAULT_EPS_TILDE

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 0:
            raise ContractViolation(f"N 必须是非负整数，收到 {self.N!r}")
        if int(self.r) != self.r or self.r < 1:
            raise ContractViolation(f"r 必须是正整数，收到 {self.r!r}")
        if not 0 < self.eps_tilde < math.pi:
            raise ContractViolation(f"eps_tilde 必须在 (0, π) 内，收到 {self.eps_tilde!r}")


def cfl_max_step(delta_x: float, spec: CflSpec) -> float:
    if not delta_x > 0:
        raise ContractViolation(f"delta_x 必须为正，收到 {delta_x!r}")
    angle = (math.pi - spec.eps_tilde) / (2 * (2 * spec.r * (spec.N + 1) + 1))
    return delta_x**2 * math.tan(angle)


def check_cfl(h: float, delta_x: float, spec: CflSpec) -> float:
    """h 满足 CFL 时返回 h_max，否则抛出 CflViolation。"""
    h_max = cfl_max_step(delta_x, spec)
    if h > h_max:
        raise CflViolation(h, h_max, spec)
    return h_max


def _require_source(source: str) -> None:
    if source not in REMAINDER_SOURCES:
        raise ContractViolation(f"X_P1 来源必须是 {REMAINDER_SOURCES} 之一，收到 {source!r}")


def remainder_field(
    grid: GridSpec, params: ModelParams, h: float, source: RemainderSource = "closed_form"
) -> FieldOperator:
    """X_{P₁,h}：闭式表达式，或由 Ψʰ_ε 与 P₀ 流之差数值拟合得到。"""
    _require_source(source)
    if source == "extracted":
        return ExtractedRemainderField(grid, params, h)
    return p1_field(grid, params, h)


def z_field(
    grid: GridSpec,
    params: ModelParams,
    h: float,
    ell: int,
    j: int,
    tol: float = DEFAULT_TOL,
    k_max: int = DEFAULT_K_MAX,
    source: RemainderSource = "closed_form",
) -> FieldOperator:
    """递推项 Z_{ℓ,j}（时间 1 约定），次数 2r(ℓ+j) + 1。

    支持 (0,0)、(1,0)、(1,1) 与 (2,0)；其余指标抛出 Unsupported。
    `source` 只影响 Z_{1,1}。
    """
    _require_source(source)
    index = (ell, j)
    if index == (0, 0):
        return time_one_generator(grid, h)

    generator = time_one_generator(grid, h).negated()
    if index == (1, 0):
        series = ad_series(generator, conjugate_field(p0_field(grid, params, h), grid, h), tol, k_max)
        series.name = "Z(1,0)"
        return series
    if index == (1, 1):
        remainder = remainder_field(grid, params, h, source)
        series = ad_series(generator, conjugate_field(remainder, grid, h), tol, k_max)
        series.name = "Z(1,1)"
        return series
    if index == (2, 0):
        first = ad_series(generator, conjugate_field(p0_field(grid, params, h), grid, h), tol, k_max)
        return QuadraticSeriesField(first, "Z(2,0)")
    raise Unsupported(f"Z({ell},{j})")


def _require_order(N: int) -> None:
    if N not in SUPPORTED_ORDERS:
        raise Unsupported(f"修正能量阶 N={N!r}（仅支持 0 与 1）")


def modified_energy_field(
    grid: GridSpec,
    params: ModelParams,
    h: float,
    N: int,
    eps_tilde: float = DEFAULT_EPS_TILDE,
    tol: float = DEFAULT_TOL,
    k_max: int = DEFAULT_K_MAX,
    remainder: RemainderSource = "closed_form",
) -> FieldOperator:
    """X_{H_h^{(N)}}，其时间 h 流与中点法一步相差 O(h^{N+2})。"""
    _require_order(N)
    check_cfl(h, grid.delta_x, CflSpec(N, params.r, eps_tilde))
    terms: list[tuple[complex, FieldOperator]] = [
        (1.0, a0_field(grid, h)),
        (1.0, z_field(grid, params, h, 1, 0, tol, k_max)),
    ]
    if N >= 1:
        terms.append((h, z_field(grid, params, h, 2, 0, tol, k_max)))
        terms.append((h, z_field(grid, params, h, 1, 1, tol, k_max, remainder)))
    return SumField(grid, terms, f"X_H^({N})")


def modified_energy(
    grid: GridSpec,
    params: ModelParams,
    h: float,
    N: int,
    u,
    eps_tilde: float = DEFAULT_EPS_TILDE,
    tol: float = DEFAULT_TOL,
    k_max: int = DEFAULT_K_MAX,
    remainder: RemainderSource = "closed_form",
) -> float:
    """H_h^{(N)}(u) = A₀(u) + P(Z_{1,0})(u) [+ h·(P(Z_{2,0}) + P(Z_{1,1}))(u)]。"""
    _require_order(N)
    check_cfl(h, grid.delta_x, CflSpec(N, params.r, eps_tilde))
    u = as_state(grid, u)
    value = a0_energy(grid, h, u)
    value += hamiltonian_from_field(grid, z_field(grid, params, h, 1, 0, tol, k_max), u)
    if N >= 1:
        correction = hamiltonian_from_field(grid, z_field(grid, params, h, 2, 0, tol, k_max), u)
        correction += hamiltonian_from_field(grid, z_field(grid, params, h, 1, 1, tol, k_max, remainder), u)
        value += h * correction
    return float(value)


# ---- 剩余项提取 ----

STENCIL_POINTS = 6
FIT_DEGREE = 4
FIT_TOLERANCE = 1e-4
# 射流不动点迭代的逐阶相对收敛阈值
_JET_RTOL = 1e-13


@dataclass(frozen=True)
class RemainderFit:
    """D(ε) = Ψʰ_ε(u) − Φ^ε_{P₀,h}(u) 在 ε 上的多项式拟合。

    `coefficients[m]` 是 ε^m 的系数（已去除缩放），`residual` 是相对拟合残差。
    """

    eps_values: np.ndarray
    coefficients: np.ndarray
    residual: float

    @property
    def remainder(self) -> np.ndarray:
        return self.coefficients[2]


def stencil_base(grid: GridSpec, params: ModelParams, h: float, u: np.ndarray) -> float:
    """ε₀ = min(h, 0.1·‖u‖_δx^{−2r})。"""
    size = float(norm_dx(grid, u))
    if size == 0:
        return float(h)
    return float(min(h, 0.1 * size ** (-2 * params.r)))


def _fit_stencil(
    scaled: np.ndarray, eps0: float, differences: np.ndarray, degree: int, tolerance: float
) -> tuple[np.ndarray, float]:
    """按行对 ε/ε₀ 做最小二乘多项式拟合，返回去缩放的系数与相对残差。"""
    design = np.vander(scaled, degree + 1, increasing=True)
    fitted, *_ = np.linalg.lstsq(design, differences, rcond=None)
    scale = float(np.linalg.norm(differences))
    residual = float(np.linalg.norm(design @ fitted - differences)) / scale if scale > 0 else 0.0
    coefficients = fitted / (eps0 ** np.arange(degree + 1))[:, None]
    logger.debug("剩余项拟合: ε₀={:.3g}, 相对残差 {:.2e}", eps0, residual)
    if residual > tolerance:
        raise IllConditionedFit(residual, tolerance)
    return coefficients, residual


def fit_remainder(
    grid: GridSpec,
    params: ModelParams,
    h: float,
    u,
    solver: Optional[SolverParams] = None,
    points: int = STENCIL_POINTS,
    degree: int = FIT_DEGREE,
    tolerance: float = FIT_TOLERANCE,
) -> RemainderFit:
    if not h > 0:
        raise ContractViolation(f"剩余项提取需要 h > 0，收到 {h!r}")
    if points <= degree:
        raise ContractViolation(f"模板点数 {points} 必须多于拟合次数 {degree}")
    u = as_state(grid, u)
    solver = solver or SolverParams(h=h)
    eps0 = stencil_base(grid, params, h, u)
    scaled = 0.5 ** np.arange(points)
    eps_values = eps0 * scaled

    if params.is_linear:
        coefficients = np.zeros((degree + 1, grid.n), dtype=np.complex128)
        return RemainderFit(eps_values, coefficients, 0.0)

    leading = p0_field(grid, params, h)
    differences = np.empty((points, grid.n), dtype=np.complex128)
    for i, eps in enumerate(eps_values):
        psi, _ = psi_map(grid, params, h, float(eps), u, solver)
        differences[i] = psi - reference_flow(leading, u, float(eps), solver.ref_tol)

    coefficients, residual = _fit_stencil(scaled, eps0, differences, degree, tolerance)
    return RemainderFit(eps_values, coefficients, residual)


def extract_remainder_field(
    grid: GridSpec,
    params: ModelParams,
    h: float,
    u,
    solver: Optional[SolverParams] = None,
    tolerance: float = FIT_TOLERANCE,
) -> np.ndarray:
    """数值提取 X_{P₁,h}(u)：Ψʰ_ε(u) − Φ^ε_{P₀,h}(u) 的 ε² 系数。"""
    return fit_remainder(grid, params, h, u, solver, tolerance=tolerance).remainder


# ---- 射流上的剩余项提取 ----

class _JetLayout:
    """射流（值与切向量）与一维复向量之间的打包。"""

    def __init__(self, jet: Jet):
        self.val_shape = jet.val.shape
        self.tan_shape = None if jet.tan is None else jet.tan.shape
        self.val_size = jet.val.size

    def pack(self, jet: Jet) -> np.ndarray:
        parts = [np.asarray(jet.val).ravel()]
        if self.tan_shape is not None:
            tan = jet.tan if jet.tan is not None else np.zeros(self.tan_shape, dtype=np.complex128)
            parts.append(np.asarray(tan).ravel())
        return np.concatenate(parts)

    def unpack(self, y: np.ndarray) -> Jet:
        val = y[: self.val_size].reshape(self.val_shape)
        tan = None if self.tan_shape is None else y[self.val_size :].reshape(self.tan_shape)
        return Jet(val, tan)

    def spread(self, per_order: np.ndarray) -> np.ndarray:
        """把逐阶的量铺成与 `pack` 结果同形状的实向量。"""
        parts = [np.broadcast_to(per_order[:, None], self.val_shape).ravel()]
        if self.tan_shape is not None:
            parts.append(np.broadcast_to(per_order[None, :, None], self.tan_shape).ravel())
        return np.concatenate(parts)


def _order_scale(jet: Jet, degree: int) -> np.ndarray:
    """第 k 阶的量级 degree^k·max|c_k|，覆盖 d 次场在该阶上的组合频率。"""
    sizes = np.max(np.abs(jet.val), axis=-1)
    if jet.tan is not None:
        sizes = np.maximum(sizes, np.max(np.abs(jet.tan), axis=(0, 2)))
    return sizes * float(degree) ** np.arange(sizes.shape[0])


def _order_change(update: Jet, scale: np.ndarray) -> float:
    change = np.max(np.abs(update.val), axis=-1)
    if update.tan is not None:
        change = np.maximum(change, np.max(np.abs(update.tan), axis=(0, 2)))
    relative = np.where(scale > 0, change / np.where(scale > 0, scale, 1.0), np.where(change > 0, np.inf, 0.0))
    return float(np.max(relative))


def _psi_jet(
    grid: GridSpec, params: ModelParams, h: float, eps: float, jet: Jet, scale: np.ndarray, solver: SolverParams
) -> Jet:
    """Ψʰ_ε 作用在射流上：逐阶迭代同一个不动点映射。"""
    rotation = propagator(grid, float(h))
    resolvent = cayley_resolvent(grid, float(h), "+")
    v = jet
    change = math.inf
    for _ in range(solver.max_iters):
        image = jet + 1j * eps * resolvent.apply(nonlinearity(params, 0.5 * (jet + rotation.apply(v))))
        change = _order_change(image - v, scale)
        if change <= _JET_RTOL:
            return image
        v = image
    raise NoConvergence(solver.max_iters, change, _JET_RTOL)


def _flow_jet(field: FieldOperator, jet: Jet, eps: float, scale: np.ndarray, ref_tol: float) -> Jet:
    """Φ^ε 作用在射流上：对射流系数积分 dY/dε = X(Y)，绝对容差逐阶取 ref_tol·量级。"""
    layout = _JetLayout(jet)
    atol = ref_tol * np.maximum(layout.spread(scale), np.finfo(np.float64).tiny)
    solution = solve_ivp(
        lambda _t, y: layout.pack(field.evaluate_jet(layout.unpack(y))),
        (0.0, float(eps)),
        layout.pack(jet),
        method="DOP853",
        rtol=max(ref_tol, 100.0 * np.finfo(np.float64).eps),
        atol=atol,
    )
    if solution.status == -1:
        logger.error("射流参考流积分失败: {}", solution.message)
        raise StiffnessError(float(solution.t[-1]), solution.message)
    return layout.unpack(solution.y[:, -1])


class ExtractedRemainderField(FieldOperator):
    """数值拟合给出的 X_{P₁,h}：Ψʰ_ε − Φ^ε_{P₀,h} 的 ε² 系数。

    射流求值把同一个 ε 模板和拟合逐阶作用在射流系数上，
    因此这个场可以直接放进 ad 级数，替代闭式的 `p1_field`。
    """

    def __init__(
        self,
        grid: GridSpec,
        params: ModelParams,
        h: float,
        solver: Optional[SolverParams] = None,
        tolerance: float = FIT_TOLERANCE,
    ):
        if not h > 0:
            raise ContractViolation(f"剩余项提取需要 h > 0，收到 {h!r}")
        super().__init__(grid, 4 * params.r + 1, "X_P1(extracted)")
        self.params = params
        self.h = float(h)
        self.solver = solver or SolverParams(h=h)
        self.tolerance = tolerance

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        return extract_remainder_field(self.grid, self.params, self.h, u, self.solver, self.tolerance)

    @property
    def supports_jets(self) -> bool:
        return True

    def evaluate_jet(self, jet: Jet) -> Jet:
        if self.params.is_linear:
            return 0.0 * jet
        layout = _JetLayout(jet)
        eps0 = stencil_base(self.grid, self.params, self.h, jet.val[0])
        scaled = 0.5 ** np.arange(STENCIL_POINTS)
        scale = _order_scale(jet, 2 * self.params.r + 1)
        leading = p0_field(self.grid, self.params, self.h)

        rows = []
        for eps in eps0 * scaled:
            psi = _psi_jet(self.grid, self.params, self.h, float(eps), jet, scale, self.solver)
            flow = _flow_jet(leading, jet, float(eps), scale, self.solver.ref_tol)
            rows.append(layout.pack(psi - flow))
        coefficients, _ = _fit_stencil(scaled, eps0, np.stack(rows), FIT_DEGREE, self.tolerance)
        return layout.unpack(coefficients[2])
