# bea/jets.py
"""截断 Taylor 级数（射流）与沿线性流的 Lie 级数。

`Jet` 表示 s 的截断多项式 Σ_k c_k s^k，系数形状 (k+1, n)；
可选的切向量批 `tan`（形状 (m, k+1, n)）按前向模式携带 m 个实方向导数。
结构化向量场的表达式只用加减、乘法、共轭与线性映射写成，
因此同一段代码既能作用于数组，也能作用于射流。

沿线性场 G(u) = Lu（L 在正弦模态下对角）的拉回
    F(s)(u) = e^{−sL} Y(e^{sL}u)
满足 F^{(k)}(0) = ad_G^k Y，所以 F 的第 k 个 Taylor 系数就是 ad_G^k Y / k!。
"""

from __future__ import annotations

from numbers import Number
from typing import Callable, Optional

import numpy as np


def cauchy_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """沿倒数第二维（级数阶）做截断卷积 c_k = Σ_{i≤k} a_i b_{k−i}。"""
    order = a.shape[-2]
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(shape, dtype=np.result_type(a, b, np.complex128))
    for i in range(order):
        out[..., i:, :] += a[..., i : i + 1, :] * b[..., : order - i, :]
    return out


def _add_tangents(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if a is None:
        return b
    if b is None:
        return a
    return a + b


class Jet:
    """带切向量的截断 Taylor 级数。"""

    # 让 numpy 标量与数组在二元运算中把控制权交给 Jet 的反射方法
    __array_ufunc__ = None

    def __init__(self, val: np.ndarray, tan: Optional[np.ndarray] = None) -> None:
        self.val = np.asarray(val, dtype=np.complex128)
        self.tan = None if tan is None else np.asarray(tan, dtype=np.complex128)

    @classmethod
    def constant(cls, u: np.ndarray, directions: Optional[np.ndarray] = None) -> "Jet":
        """0 阶射流：值 u，切向量为给定方向。"""
        tan = None if directions is None else np.asarray(directions)[:, None, :]
        return cls(np.asarray(u)[None, :], tan)

    @property
    def order(self) -> int:
        return self.val.shape[-2] - 1

    def map_linear(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Jet":
        """把一个沿最后一维作用的线性映射逐系数应用到值和切向量。"""
        return Jet(fn(self.val), None if self.tan is None else fn(self.tan))

    def conj(self) -> "Jet":
        return Jet(self.val.conj(), None if self.tan is None else self.tan.conj())

    def _coerce(self, other) -> Optional["Jet"]:
        if isinstance(other, Jet):
            return other
        if isinstance(other, Number) or (isinstance(other, np.ndarray) and other.ndim <= 1):
            # 常数（标量或逐点权重）只出现在 0 阶系数上
            val = np.zeros_like(self.val)
            val[0] = other
            return Jet(val)
        return None

    def __add__(self, other) -> "Jet":
        other_jet = self._coerce(other)
        if other_jet is None:
            return NotImplemented
        return Jet(self.val + other_jet.val, _add_tangents(self.tan, other_jet.tan))

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.val, None if self.tan is None else -self.tan)

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Number) or (isinstance(other, np.ndarray) and other.ndim <= 1):
            return Jet(self.val * other, None if self.tan is None else self.tan * other)
        if not isinstance(other, Jet):
            return NotImplemented
        val = cauchy_product(self.val, other.val)
        tan = None
        if self.tan is not None:
            tan = cauchy_product(self.tan, other.val[None])
        if other.tan is not None:
            tan = _add_tangents(tan, cauchy_product(self.val[None], other.tan))
        return Jet(val, tan)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        directions = 0 if self.tan is None else self.tan.shape[0]
        return f"Jet(order={self.order}, n={self.val.shape[-1]}, directions={directions})"


def exponential_coefficients(multiplier: np.ndarray, order: int) -> np.ndarray:
    """模态乘子 L 的 e^{sL} 的 Taylor 系数 L^k/k!，形状 (order+1, n)。"""
    coefficients = np.empty((order + 1, multiplier.shape[-1]), dtype=np.complex128)
    coefficients[0] = 1.0
    for k in range(1, order + 1):
        coefficients[k] = coefficients[k - 1] * multiplier / k
    return coefficients


def lie_series(
    multiplier: np.ndarray,
    basis: np.ndarray,
    body: Callable[[Jet], Jet],
    u: np.ndarray,
    order: int,
    directions: Optional[np.ndarray] = None,
) -> Jet:
    """计算 F(s) = e^{−sL} Y(e^{sL}u) 的射流，Y 由 `body` 给出。

    返回的 `val[k]` 是 ad_G^k Y(u)/k!；若给出方向，`tan[m, k]` 是它在 u 处沿第 m 个方向的导数。
    """
    forward = exponential_coefficients(multiplier, order)
    backward = exponential_coefficients(-multiplier, order)

    start_val = (forward * (u @ basis)) @ basis
    start_tan = None
    if directions is not None:
        start_tan = (forward[None] * (np.asarray(directions) @ basis)[:, None, :]) @ basis

    image = body(Jet(start_val, start_tan))
    if not isinstance(image, Jet):
        image = Jet(np.broadcast_to(np.asarray(image, dtype=np.complex128), start_val.shape))

    pulled_val = cauchy_product(backward, image.val @ basis) @ basis
    pulled_tan = None
    if image.tan is not None:
        pulled_tan = cauchy_product(backward[None], image.tan @ basis) @ basis
    elif directions is not None:
        pulled_tan = np.zeros((len(directions),) + pulled_val.shape, dtype=np.complex128)
    return Jet(pulled_val, pulled_tan)
