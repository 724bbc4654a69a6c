# bea/fields.py
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from core.errors import ContractViolation, Unsupported
from lattice import GridSpec, SpectralOperator, as_state, norm_dx

from .jets import Jet

# 复合场的中心差分步长系数：δ = 1e-5·max(1, ‖u‖)
FD_STEP = 1e-5


class FieldOperator(ABC):
    """
    向量场抽象基类 (Abstract Base Class)。

    向量场是 BEA 代数的基本单元：可以求值、求方向导数（Jacobian-向量积），
    并可以组合成换位子、Bernoulli ad 级数与 Z 场。

    - `evaluate`: 在状态 u 处求值 X(u)。
    - `jvp`: 在 u 处沿实方向 v 的方向导数 d/dt X(u + tv)，t 为实数。
      默认实现是 (p, q) 坐标下的中心差分；线性场与结构化多项式场给出精确值。
    - `evaluate_jet`: 在 Taylor 射流上求值，供 ad 级数精确计算 ad^k 项。
    - `degree`: 齐次多项式次数元数据（未知时为 None）。
    """

    def __init__(self, grid: GridSpec, degree: Optional[int], name: str):
        """
        初始化向量场。

        Args:
            grid (GridSpec): 场所在的格点。
            degree (Optional[int]): 齐次次数；和式等次数不确定的场为 None。
            name (str): 便于日志与调试的名称。
        """
        self.grid = grid
        self.degree = degree
        self.name = name

    @abstractmethod
    def evaluate(self, u: np.ndarray) -> np.ndarray:
        """
        在状态 u 处求值。调用方已经校验过 u 的形状。

        Returns:
            np.ndarray: 与 u 同形状的复向量 X(u)。
        """
        raise NotImplementedError("子类必须实现 evaluate 方法")

    def __call__(self, u) -> np.ndarray:
        return self.evaluate(as_state(self.grid, u))

    def jvp(self, u, v) -> np.ndarray:
        u = as_state(self.grid, u)
        v = as_state(self.grid, v, "v")
        v_size = float(np.linalg.norm(v))
        if v_size == 0:
            return np.zeros_like(u)
        delta = FD_STEP * max(1.0, float(norm_dx(self.grid, u))) / v_size
        return (self.evaluate(u + delta * v) - self.evaluate(u - delta * v)) / (2.0 * delta)

    @property
    def supports_jets(self) -> bool:
        return False

    def evaluate_jet(self, jet: Jet) -> Jet:
        raise Unsupported(f"向量场 '{self.name}' 不支持射流求值")

    # --- 代数运算 ---
    def __add__(self, other: "FieldOperator") -> "FieldOperator":
        if not isinstance(other, FieldOperator):
            return NotImplemented
        return SumField(self.grid, [(1.0, self), (1.0, other)])

    def __sub__(self, other: "FieldOperator") -> "FieldOperator":
        if not isinstance(other, FieldOperator):
            return NotImplemented
        return SumField(self.grid, [(1.0, self), (-1.0, other)])

    def __neg__(self) -> "FieldOperator":
        return SumField(self.grid, [(-1.0, self)])

    def __rmul__(self, factor: complex) -> "FieldOperator":
        return SumField(self.grid, [(factor, self)])

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, degree={self.degree})"


class ZeroField(FieldOperator):
    def __init__(self, grid: GridSpec, degree: Optional[int] = None, name: str = "0"):
        super().__init__(grid, degree, name)

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        return np.zeros_like(u)

    def jvp(self, u, v) -> np.ndarray:
        return np.zeros_like(as_state(self.grid, u))

    @property
    def supports_jets(self) -> bool:
        return True

    def evaluate_jet(self, jet: Jet) -> Jet:
        return 0.0 * jet


class SpectralField(FieldOperator):
    """线性场 u ↦ g(A)u，g(A) 在正弦模态下对角。"""

    def __init__(self, operator: SpectralOperator, name: Optional[str] = None):
        super().__init__(operator.grid, 1, name or operator.label)
        self.operator = operator

    @property
    def multiplier(self) -> np.ndarray:
        return self.operator.multiplier

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        return self.operator.apply(u)

    def jvp(self, u, v) -> np.ndarray:
        return self.operator.apply(as_state(self.grid, v, "v"))

    @property
    def supports_jets(self) -> bool:
        return True

    def evaluate_jet(self, jet: Jet) -> Jet:
        return self.operator.apply(jet)

    def negated(self) -> "SpectralField":
        return SpectralField(self.operator.scaled(-1.0), f"-{self.name}")


class DenseLinearField(FieldOperator):
    """由稠密复矩阵给出的线性场 u ↦ Mu，用于小网格上的矩阵对照。"""

    def __init__(self, grid: GridSpec, matrix: np.ndarray, name: str = "M"):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (grid.n, grid.n):
            raise ContractViolation(f"矩阵形状应为 {(grid.n, grid.n)}，收到 {matrix.shape}")
        super().__init__(grid, 1, name)
        self.matrix = matrix

    def _apply(self, x: np.ndarray) -> np.ndarray:
        return x @ self.matrix.T

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        return self._apply(u)

    def jvp(self, u, v) -> np.ndarray:
        return self._apply(as_state(self.grid, v, "v"))

    @property
    def supports_jets(self) -> bool:
        return True

    def evaluate_jet(self, jet: Jet) -> Jet:
        return jet.map_linear(self._apply)


class PolynomialField(FieldOperator):
    """由结构化表达式 `body` 给出的齐次多项式场。

    `body` 只使用格点的线性算子、乘法与共轭，因此同时适用于数组和射流；
    jvp 通过一个 0 阶、单方向的射流精确求出。
    """

    def __init__(self, grid: GridSpec, body: Callable, degree: int, name: str):
        super().__init__(grid, degree, name)
        self.body = body

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.body(u), dtype=np.complex128)

    def jvp(self, u, v) -> np.ndarray:
        u = as_state(self.grid, u)
        v = as_state(self.grid, v, "v")
        image = self.body(Jet.constant(u, v[None, :]))
        if not isinstance(image, Jet) or image.tan is None:
            return np.zeros_like(u)
        return image.tan[0, 0]

    @property
    def supports_jets(self) -> bool:
        return True

    def evaluate_jet(self, jet: Jet) -> Jet:
        return self.body(jet)


class ConjugatedField(FieldOperator):
    """u ↦ R·X(R*u)，R 为 A 的酉函数。"""

    def __init__(self, base: FieldOperator, rotation: SpectralOperator, name: Optional[str] = None):
        super().__init__(base.grid, base.degree, name or f"R∘{base.name}∘R*")
        self.base = base
        self.rotation = rotation
        self.inverse = rotation.adjoint()

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        return self.rotation.apply(self.base.evaluate(self.inverse.apply(u)))

    def jvp(self, u, v) -> np.ndarray:
        u = as_state(self.grid, u)
        v = as_state(self.grid, v, "v")
        return self.rotation.apply(self.base.jvp(self.inverse.apply(u), self.inverse.apply(v)))

    @property
    def supports_jets(self) -> bool:
        return self.base.supports_jets

    def evaluate_jet(self, jet: Jet) -> Jet:
        return self.rotation.apply(self.base.evaluate_jet(self.inverse.apply(jet)))


class SumField(FieldOperator):
    """线性组合 Σ c_i X_i。"""

    def __init__(self, grid: GridSpec, terms: Iterable[tuple[complex, FieldOperator]], name: Optional[str] = None):
        terms = list(terms)
        degrees = {field.degree for _, field in terms}
        degree = degrees.pop() if len(degrees) == 1 else None
        super().__init__(grid, degree, name or " + ".join(f"{c}·{f.name}" for c, f in terms))
        self.terms: Sequence[tuple[complex, FieldOperator]] = terms

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        total = np.zeros_like(u)
        for factor, field in self.terms:
            total = total + factor * field.evaluate(u)
        return total

    def jvp(self, u, v) -> np.ndarray:
        total = np.zeros_like(as_state(self.grid, u))
        for factor, field in self.terms:
            total = total + factor * field.jvp(u, v)
        return total

    @property
    def supports_jets(self) -> bool:
        return all(field.supports_jets for _, field in self.terms)

    def evaluate_jet(self, jet: Jet) -> Jet:
        total = 0.0 * jet
        for factor, field in self.terms:
            total = total + factor * field.evaluate_jet(jet)
        return total


class CommutatorField(FieldOperator):
    """[X, Y](u) = jvp_Y(u, X(u)) − jvp_X(u, Y(u))。

    对线性场 X = Bu、Y = Cu 给出 (CB − BC)u。
    """

    def __init__(self, left: FieldOperator, right: FieldOperator):
        degree = None
        if left.degree is not None and right.degree is not None:
            degree = left.degree + right.degree - 1
        super().__init__(left.grid, degree, f"[{left.name}, {right.name}]")
        self.left = left
        self.right = right

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        return self.right.jvp(u, self.left.evaluate(u)) - self.left.jvp(u, self.right.evaluate(u))
