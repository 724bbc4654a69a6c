# bea/hamiltonians.py
"""哈密顿函数与其向量场。

约定 X_H = iδx⁻¹∇_ū H，u = (p + iq)/√2，∇_ū = (∂_p + i∂_q)/√2。
记 B = (1 − ihA/2)⁻¹，C = (1 + ihA/2)⁻¹ = B*，w = Bu。
"""

from __future__ import annotations

import numpy as np
from loguru import logger

from core.errors import ContractViolation
from lattice import (
    GridSpec,
    ModelParams,
    as_state,
    cayley_resolvent,
    function_of_laplacian,
    nonlinearity,
    nonlinearity_derivative,
    norm_dx,
    propagator,
    random_state,
)
from stepper import leading_term_map

from .fields import (
    CommutatorField,
    ConjugatedField,
    FieldOperator,
    PolynomialField,
    SpectralField,
    ZeroField,
)


def time_one_generator(grid: GridSpec, h: float) -> SpectralField:
    """时间 1 的线性场 2i·arctan(hA/2)，其时间 1 流恰为 R(hA)。"""
    operator = function_of_laplacian(grid, lambda lam: 2j * np.arctan(h * lam / 2.0), f"2i·arctan({h}A/2)")
    return SpectralField(operator, "X_A0(time 1)")


def a0_field(grid: GridSpec, h: float) -> SpectralField:
    """(2i/h)·arctan(hA/2)，其时间 h 流为 R(hA)。"""
    if not h > 0:
        raise ContractViolation(f"a0_field 需要 h > 0，收到 {h!r}")
    operator = function_of_laplacian(
        grid, lambda lam: (2j / h) * np.arctan(h * lam / 2.0), f"(2i/{h})arctan({h}A/2)"
    )
    return SpectralField(operator, "X_A0")


def a0_energy(grid: GridSpec, h: float, u) -> float:
    """A₀(u) = δx·ūᵀ(2/h)arctan(hA/2)u。"""
    if not h > 0:
        raise ContractViolation(f"a0_energy 需要 h > 0，收到 {h!r}")
    u = as_state(grid, u)
    symbol = function_of_laplacian(grid, lambda lam: (2.0 / h) * np.arctan(h * lam / 2.0), "A0")
    return float(grid.delta_x * np.sum((u.conj() * symbol.apply(u)).real))


def p0_energy(grid: GridSpec, params: ModelParams, h: float, u) -> float:
    """P₀,h(u) = (λ/(r+1))·δx·Σ|w_ℓ|^{2r+2}。"""
    w = cayley_resolvent(grid, float(h), "-").apply(as_state(grid, u))
    weight = params.lam / (params.r + 1)
    return float(weight * grid.delta_x * np.sum(np.abs(w) ** (2 * params.r + 2)))


def p0_field(grid: GridSpec, params: ModelParams, h: float) -> FieldOperator:
    """X_{P₀,h}(u) = iλ·C(|w|^{2r}w)，与 Ψʰ_ε 的一阶系数 Ψ_{h,1} 相同。"""
    if params.is_linear:
        return ZeroField(grid, 2 * params.r + 1, "X_P0")
    return PolynomialField(
        grid, lambda x: leading_term_map(grid, params, h, x), 2 * params.r + 1, "X_P0"
    )


def _p1_weight(grid: GridSpec, h: float):
    # K_h = −(hA/2)(1 + h²A²/4)⁻¹，实对称
    return function_of_laplacian(grid, lambda lam: -(h * lam / 2.0) / (1.0 + (h * lam / 2.0) ** 2), "K_h")


def p1_field(grid: GridSpec, params: ModelParams, h: float) -> FieldOperator:
    """Ψʰ_ε 与 P₀,h 流之差的 ε² 系数：

        X_{P₁,h}(u) = (i/2)·C·Df(w)[(ihA/2)·B·Ψ_{h,1}(u)] = (i/2)·C·Df(w)[K_h f(w)]。
    """
    if params.is_linear:
        return ZeroField(grid, 4 * params.r + 1, "X_P1")
    lower = cayley_resolvent(grid, float(h), "-")
    upper = cayley_resolvent(grid, float(h), "+")
    weight = _p1_weight(grid, h)

    def body(x):
        w = lower.apply(x)
        direction = weight.apply(nonlinearity(params, w))
        return upper.apply(0.5j * nonlinearity_derivative(params, w, direction))

    return PolynomialField(grid, body, 4 * params.r + 1, "X_P1")


def p1_energy(grid: GridSpec, params: ModelParams, h: float, u) -> float:
    """P₁,h(u) = ½δx·Re⟨K_h f(w), f(w)⟩ = −(h/4)δx·f(w)*A(1 + h²A²/4)⁻¹f(w)。"""
    w = cayley_resolvent(grid, float(h), "-").apply(as_state(grid, u))
    f = nonlinearity(params, w)
    return float(0.5 * grid.delta_x * np.sum((f.conj() * _p1_weight(grid, h).apply(f)).real))


def nlse_field(grid: GridSpec, params: ModelParams) -> FieldOperator:
    """完整的离散 NLSE 场 iAu + i·f(u)，即能量 H 的哈密顿场。"""
    laplacian = function_of_laplacian(grid, lambda lam: lam, "A")

    def body(x):
        return 1j * (laplacian.apply(x) + nonlinearity(params, x))

    degree = 1 if params.is_linear else None
    return PolynomialField(grid, body, degree, "X_H")


def conjugate_field(field: FieldOperator, grid: GridSpec, h: float) -> FieldOperator:
    """u ↦ R(hA)·X(R(hA)*u)，即 X_{P∘R(hA)*}。"""
    if h == 0:
        return field
    return ConjugatedField(field, propagator(grid, float(h)))


def commutator(left: FieldOperator, right: FieldOperator) -> FieldOperator:
    return CommutatorField(left, right)


def hamiltonian_from_field(grid: GridSpec, field: FieldOperator, u) -> float:
    """齐次 d 次哈密顿场的哈密顿量 P(u) = 2δx·Im(ūᵀX(u))/(d+1)。"""
    if field.degree is None:
        raise ContractViolation(f"向量场 '{field.name}' 缺少齐次次数元数据")
    u = as_state(grid, u)
    pairing = np.sum(u.conj() * field.evaluate(u))
    return float(2.0 * grid.delta_x * pairing.imag / (field.degree + 1))


def sampled_operator_norm(
    field: FieldOperator,
    grid: GridSpec,
    rng: np.random.Generator,
    radius: float = 1.0,
    samples: int = 32,
) -> float:
    """多项式场范数 sup ‖X(u)‖_δx/‖u‖^d 的采样下界。"""
    if field.degree is None:
        raise ContractViolation(f"向量场 '{field.name}' 缺少齐次次数元数据")
    best = 0.0
    for _ in range(samples):
        u = random_state(grid, rng, radius)
        best = max(best, float(norm_dx(grid, field(u))) / radius**field.degree)
    logger.debug("采样范数 {}: {:.4g}（{} 个样本）", field.name, best, samples)
    return best


