# lattice/grid.py
"""格点几何与模型参数。

状态空间是 2K+1 维复向量，逻辑下标 ℓ = −K..K，幽灵值 u_{±(K+1)} 恒为 0 且不存储。
状态直接用 `numpy` 的 complex128 数组表示（实部、虚部交错存储）。
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from core.errors import ContractViolation


@dataclass(frozen=True)
class GridSpec:
    """格点的半宽 K 与网格步长 δx。"""

    K: int
    delta_x: float

    def __post_init__(self) -> None:
        if isinstance(self.K, bool) or int(self.K) != self.K or self.K < 1:
            raise ContractViolation(f"K 必须是不小于 1 的整数，收到 {self.K!r}")
        if not (math.isfinite(self.delta_x) and self.delta_x > 0):
            raise ContractViolation(f"delta_x 必须是有限正数，收到 {self.delta_x!r}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "delta_x", float(self.delta_x))

    @property
    def n(self) -> int:
        """状态维数 2K+1。"""
        return 2 * self.K + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def extent(self) -> float:
        """半区间长度 X = Kδx。"""
        return self.K * self.delta_x

    def positions(self) -> np.ndarray:
        """节点坐标 ℓ·δx。"""
        return self.indices * self.delta_x


@dataclass(frozen=True)
class ModelParams:
    """非线性次数 r 与符号 λ（λ=0 是线性诊断模式）。"""

    lam: int
    r: int

    def __post_init__(self) -> None:
        if self.lam not in (-1, 0, 1):
            raise ContractViolation(f"lambda 必须属于 {{-1, 0, 1}}，收到 {self.lam!r}")
        if isinstance(self.r, bool) or int(self.r) != self.r or self.r < 1:
            raise ContractViolation(f"r 必须是不小于 1 的整数，收到 {self.r!r}")
        object.__setattr__(self, "lam", int(self.lam))
        object.__setattr__(self, "r", int(self.r))

    @property
    def is_linear(self) -> bool:
        return self.lam == 0


def as_state(grid: GridSpec, u, name: str = "u") -> np.ndarray:
    """校验并转换为 complex128 状态数组（最后一维为格点维）。"""
    state = np.asarray(u, dtype=np.complex128)
    if state.ndim == 0 or state.shape[-1] != grid.n:
        raise ContractViolation(
            f"{name} 的维数应为 {grid.n}（K={grid.K}），收到形状 {state.shape}"
        )
    if not np.all(np.isfinite(state)):
        raise ContractViolation(f"{name} 含有非有限值")
    return state


def zeros(grid: GridSpec) -> np.ndarray:
    return np.zeros(grid.n, dtype=np.complex128)


def to_real(u: np.ndarray) -> np.ndarray:
    """复状态 u = (p + iq)/√2 到实表示 (p, q) 的拼接。"""
    u = np.asarray(u, dtype=np.complex128)
    return np.concatenate([math.sqrt(2.0) * u.real, math.sqrt(2.0) * u.imag], axis=-1)


def from_real(x: np.ndarray) -> np.ndarray:
    """`to_real` 的逆映射。"""
    x = np.asarray(x, dtype=np.float64)
    half = x.shape[-1] // 2
    return (x[..., :half] + 1j * x[..., half:]) / math.sqrt(2.0)
