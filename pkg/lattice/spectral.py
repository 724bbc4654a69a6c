# lattice/spectral.py
"""离散 Laplacian A 及其正弦谱。

A = tridiag(−1, 2, −1)/δx²（Dirichlet 幽灵值），被 I 型离散正弦变换对角化：
    S_{jk} = sqrt(2/(n+1)) sin(jkπ/(n+1)),  λ_j = (2 − 2cos(jπ/(n+1)))/δx²。
S 是对称正交矩阵，所以正变换与逆变换都是最后一维上的 `x @ S`。
A 的任意函数 g(A) 由 `SpectralOperator` 在模态空间以乘子形式作用。
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from scipy.linalg import eigh_tridiagonal

from core.errors import ContractViolation

from .grid import GridSpec, as_state

CayleySign = Literal["+", "-"]


@lru_cache(maxsize=64)
def sine_basis(n: int) -> np.ndarray:
    """正交对称的 DST-I 矩阵（只读）。"""
    k = np.arange(1, n + 1)
    basis = np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(k, k) * np.pi / (n + 1))
    basis.setflags(write=False)
    return basis


@lru_cache(maxsize=64)
def laplacian_eigenvalues(grid: GridSpec) -> np.ndarray:
    j = np.arange(1, grid.n + 1)
    values = (2.0 - 2.0 * np.cos(j * np.pi / (grid.n + 1))) / grid.delta_x**2
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class SineSpectrum:
    """特征值与一对模态变换 (to_modes, from_modes)，满足 A = Uᵀ D U。"""

    eigenvalues: np.ndarray
    basis: np.ndarray

    def to_modes(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u) @ self.basis

    def from_modes(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c) @ self.basis


def sine_spectrum(grid: GridSpec) -> SineSpectrum:
    return SineSpectrum(eigenvalues=laplacian_eigenvalues(grid), basis=sine_basis(grid.n))


class SpectralOperator:
    """A 的函数 g(A)，在正弦模态空间按乘子 g(λ_j) 对角作用。

    `apply` 同时接受状态数组（任意前导维）和带 `map_linear` 的 Taylor 射流对象。
    """

    def __init__(self, grid: GridSpec, multiplier: np.ndarray, label: str = "g(A)") -> None:
        self.grid = grid
        self.multiplier = np.asarray(multiplier, dtype=np.complex128)
        self.multiplier.setflags(write=False)
        self.basis = sine_basis(grid.n)
        self.label = label

    def _apply_array(self, x: np.ndarray) -> np.ndarray:
        return ((x @ self.basis) * self.multiplier) @ self.basis

    def apply(self, x):
        if hasattr(x, "map_linear"):
            return x.map_linear(self._apply_array)
        return self._apply_array(np.asarray(x, dtype=np.complex128))

    __call__ = apply

    def adjoint(self) -> "SpectralOperator":
        return SpectralOperator(self.grid, self.multiplier.conj(), f"{self.label}*")

    def scaled(self, factor: complex) -> "SpectralOperator":
        return SpectralOperator(self.grid, factor * self.multiplier, f"{factor}·{self.label}")

    def matrix(self) -> np.ndarray:
        """稠密矩阵形式，仅用于小网格上的对照。"""
        return self.basis @ np.diag(self.multiplier) @ self.basis

    def __repr__(self) -> str:
        return f"SpectralOperator({self.label}, K={self.grid.K}, delta_x={self.grid.delta_x})"


def function_of_laplacian(
    grid: GridSpec, fn: Callable[[np.ndarray], np.ndarray], label: str
) -> SpectralOperator:
    return SpectralOperator(grid, fn(laplacian_eigenvalues(grid)), label)


@lru_cache(maxsize=256)
def propagator(grid: GridSpec, h: float) -> SpectralOperator:
    """中点法的稳定函数 R(hA) = (1 + ihA/2)/(1 − ihA/2) = exp(2i·arctan(hA/2))。"""
    return function_of_laplacian(
        grid, lambda lam: np.exp(2j * np.arctan(h * lam / 2.0)), f"R({h}A)"
    )


@lru_cache(maxsize=256)
def cayley_resolvent(grid: GridSpec, h: float, sign: CayleySign) -> SpectralOperator:
    """(1 + ihA/2)⁻¹（sign='+'）或 (1 − ihA/2)⁻¹（sign='-'）。"""
    s = 1.0 if sign == "+" else -1.0
    return function_of_laplacian(
        grid, lambda lam: 1.0 / (1.0 + s * 0.5j * h * lam), f"(1{sign}i{h}A/2)^-1"
    )


def apply_laplacian(grid: GridSpec, u) -> np.ndarray:
    """三对角差分模板直接作用，幽灵值补零。"""
    u = as_state(grid, u)
    padded = np.pad(u, [(0, 0)] * (u.ndim - 1) + [(1, 1)])
    return (2.0 * u - padded[..., :-2] - padded[..., 2:]) / grid.delta_x**2


def apply_propagator(grid: GridSpec, h: float, u, adjoint: bool = False) -> np.ndarray:
    """R(hA)u；`adjoint=True` 时为 R(hA)*u（相位取反）。"""
    op = propagator(grid, float(h))
    return (op.adjoint() if adjoint else op).apply(as_state(grid, u))


def apply_cayley_resolvent(grid: GridSpec, h: float, sign: CayleySign, u) -> np.ndarray:
    if sign not in ("+", "-"):
        raise ContractViolation(f"sign 必须是 '+' 或 '-'，收到 {sign!r}")
    return cayley_resolvent(grid, float(h), sign).apply(as_state(grid, u))


def laplacian_matrix(grid: GridSpec) -> np.ndarray:
    n = grid.n
    return (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / grid.delta_x**2


def dense_eigenvalues(grid: GridSpec) -> np.ndarray:
    """用 scipy 的对称三对角特征求解器独立计算 A 的谱（升序）。"""
    diagonal = np.full(grid.n, 2.0 / grid.delta_x**2)
    off_diagonal = np.full(grid.n - 1, -1.0 / grid.delta_x**2)
    return eigh_tridiagonal(diagonal, off_diagonal, eigvals_only=True)
