# lattice/functionals.py
"""离散范数、守恒量、非线性项与分段线性嵌入。

约定：范数与能量一律采用双线性形式
    ‖u‖²_δx = δx·Re ūᵀ(I + A)u,   H(u) = δx·ūᵀAu + (λ/(r+1))·δx·Σ|u_ℓ|^{2r+2}。
`nonlinearity` 与 `nonlinearity_derivative` 只用乘法与共轭写成，
因此既能作用在数组上，也能作用在 Taylor 射流上。
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, ModelParams, as_state
from .spectral import apply_laplacian


def inner_dx(grid: GridSpec, u, v) -> float | np.ndarray:
    u = as_state(grid, u, "u")
    v = as_state(grid, v, "v")
    return grid.delta_x * np.sum((u.conj() * (v + apply_laplacian(grid, v))).real, axis=-1)


def norm_dx(grid: GridSpec, u) -> float | np.ndarray:
    return np.sqrt(np.maximum(inner_dx(grid, u, u), 0.0))


def mass(grid: GridSpec, u) -> float | np.ndarray:
    """离散 L² 不变量 N(u) = δx·Σ|u_ℓ|²。"""
    u = as_state(grid, u)
    return grid.delta_x * np.sum(np.abs(u) ** 2, axis=-1)


def kinetic_energy(grid: GridSpec, u) -> float | np.ndarray:
    u = as_state(grid, u)
    return grid.delta_x * np.sum((u.conj() * apply_laplacian(grid, u)).real, axis=-1)


def discrete_gradient_energy(grid: GridSpec, u) -> float | np.ndarray:
    """差分求和形式 δx·Σ_{ℓ=−K−1}^{K} |u_{ℓ+1} − u_ℓ|²/δx²（含两端幽灵差分）。

    与 `kinetic_energy` 相等；带前因子 2 的求和写法会多出一倍。
    """
    u = as_state(grid, u)
    padded = np.pad(u, [(0, 0)] * (u.ndim - 1) + [(1, 1)])
    return np.sum(np.abs(np.diff(padded, axis=-1)) ** 2, axis=-1) / grid.delta_x


def potential_energy(grid: GridSpec, params: ModelParams, u) -> float | np.ndarray:
    u = as_state(grid, u)
    weight = params.lam / (params.r + 1)
    return weight * grid.delta_x * np.sum(np.abs(u) ** (2 * params.r + 2), axis=-1)


def energy(grid: GridSpec, params: ModelParams, u) -> float | np.ndarray:
    return kinetic_energy(grid, u) + potential_energy(grid, params, u)


def _density_power(density, power: int):
    result = None
    for _ in range(power):
        result = density if result is None else result * density
    return result


def nonlinearity(params: ModelParams, u):
    """f(u)_ℓ = λ|u_ℓ|^{2r}u_ℓ；λ=0 时返回零场。"""
    if params.lam == 0:
        return 0.0 * u
    weight = _density_power(u * u.conj(), params.r)
    return params.lam * (weight * u)


def nonlinearity_derivative(params: ModelParams, w, q):
    """f 在 w 处沿 q 的实方向导数 λ((r+1)|w|^{2r}q + r|w|^{2r−2}w²q̄)。"""
    if params.lam == 0:
        return 0.0 * q
    r = params.r
    density = w * w.conj()
    lower = _density_power(density, r - 1)
    full = density if lower is None else lower * density
    cross = w * w * q.conj()
    if lower is not None:
        cross = lower * cross
    return params.lam * ((r + 1) * (full * q) + r * cross)


def interpolate(grid: GridSpec, u, x):
    """帽函数插值 (i_δx u)(x) = Σ_j u_j s(x/δx − j)，s(y) = max(0, 1 − |y|)。"""
    u = as_state(grid, u)
    y = np.asarray(x, dtype=np.float64) / grid.delta_x
    weights = np.clip(1.0 - np.abs(y[..., None] - grid.indices), 0.0, None)
    return weights @ u


def interpolant_h1_norm(grid: GridSpec, u) -> float:
    """插值函数在 [−(K+1)δx, (K+1)δx] 上的精确 H¹ 范数。

    每个区间上函数线性，端点值 a、b：
        ∫|f|² = δx(|a|² + |b|² + Re(a b̄))/3,   ∫|f'|² = |b − a|²/δx。
    """
    u = as_state(grid, u)
    nodes = np.concatenate([[0.0], u, [0.0]])
    a, b = nodes[:-1], nodes[1:]
    l2 = grid.delta_x * np.sum(np.abs(a) ** 2 + np.abs(b) ** 2 + (a * b.conj()).real) / 3.0
    seminorm = np.sum(np.abs(b - a) ** 2) / grid.delta_x
    return float(np.sqrt(l2 + seminorm))


def algebra_constant(grid: GridSpec, u, v) -> float:
    """经验代数常数 ‖u∘v‖_δx / (‖u‖_δx‖v‖_δx)。"""
    product = as_state(grid, u) * as_state(grid, v)
    return float(norm_dx(grid, product) / (norm_dx(grid, u) * norm_dx(grid, v)))


def rescale(grid: GridSpec, u, radius: float) -> np.ndarray:
    """把非零状态缩放到 ‖u‖_δx = radius。"""
    u = as_state(grid, u)
    current = norm_dx(grid, u)
    if current == 0:
        return u.copy()
    return u * (radius / current)


def random_state(grid: GridSpec, rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    """服从复高斯分布的随机状态，缩放到 ‖u‖_δx = radius。"""
    u = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    return rescale(grid, u, radius)
