# bea/series.py
"""Bernoulli ad 级数及其二阶推广。

对线性生成元 G（模态对角）和支持射流的场 Y：
    ad_series(G, Y) = Σ_k (B_k/k!)·ad_G^k Y = Σ_k B_k·g_k，   g_k = ad_G^k Y / k!
其中 g_k 由 `lie_series` 的 Taylor 系数直接给出，jvp 由射流切向量精确给出。

`QuadraticSeriesField` 是复合流生成元在第二阶的项：
    2·Z₂ = −Σ_{k≥1} Σ_{b<k} Σ_{k'} (B_k/k!)·C(k, b+1)·(B_{k'}/k'!)·[T_{b+k'}, T_{k−1−b}]，
T_α = ad_G^α Y。对固定的 β = k−1−b，括号按方向批量求出。
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Optional

import numpy as np
import sympy
from loguru import logger

from core.errors import ContractViolation, NonDecayingSeries, Unsupported
from lattice import as_state, norm_dx

from .fields import FieldOperator, SpectralField
from .jets import Jet, lie_series

BERNOULLI_MAX = 32
DEFAULT_TOL = 1e-12
DEFAULT_K_MAX = 24
# 连续多少个比值大于 1 视为不衰减
_GROWTH_STREAK = 3


@lru_cache(maxsize=None)
def bernoulli(k: int) -> Fraction:
    """生成函数 x/(eˣ − 1) 约定下的 Bernoulli 数，B₁ = −1/2。"""
    if isinstance(k, bool) or int(k) != k or not 0 <= k <= BERNOULLI_MAX:
        raise ContractViolation(f"Bernoulli 指标必须在 0..{BERNOULLI_MAX} 之间，收到 {k!r}")
    if k == 1:
        # sympy 1.12 起 bernoulli(1) 返回 +1/2
        return Fraction(-1, 2)
    value = sympy.bernoulli(int(k))
    return Fraction(int(value.p), int(value.q))


@dataclass(frozen=True)
class SeriesEvaluation:
    """一次级数求值的结果：和、截断指标与非零项的范数。

    `converged` 为 False 表示在 k_max 处截断时仍未达到相对容差。
    """

    value: np.ndarray
    truncation: int
    term_norms: dict[int, float]
    jet: Jet
    converged: bool = True


class AdSeriesField(FieldOperator):
    """u ↦ Σ_{k≤k*} (B_k/k!)·ad_G^k Y(u)，k* 为第一个满足 ‖项‖ ≤ tol·‖部分和‖ 的 k。"""

    def __init__(
        self,
        generator: SpectralField,
        field: FieldOperator,
        tol: float = DEFAULT_TOL,
        k_max: int = DEFAULT_K_MAX,
        name: Optional[str] = None,
    ):
        if not isinstance(generator, SpectralField):
            raise Unsupported("ad 级数的生成元必须是模态对角的线性场")
        if not field.supports_jets:
            raise Unsupported(f"向量场 '{field.name}' 不支持射流，无法精确计算 ad^k 项")
        if not 0 <= k_max <= BERNOULLI_MAX:
            raise ContractViolation(f"k_max 必须在 0..{BERNOULLI_MAX} 之间，收到 {k_max!r}")
        super().__init__(field.grid, field.degree, name or f"ad_series({generator.name}, {field.name})")
        self.generator = generator
        self.field = field
        self.tol = tol
        self.k_max = k_max

    def expand(self, u: np.ndarray, order: int, directions: Optional[np.ndarray] = None) -> Jet:
        """g_0..g_order（及其沿给定方向的导数）。"""
        return lie_series(
            self.generator.multiplier,
            self.generator.operator.basis,
            self.field.evaluate_jet,
            u,
            order,
            directions,
        )

    def resolve(self, u: np.ndarray, directions: Optional[np.ndarray] = None) -> SeriesEvaluation:
        jet = self.expand(u, self.k_max, directions)
        partial = jet.val[0].copy()
        term_norms: dict[int, float] = {0: float(norm_dx(self.grid, partial))}
        ratios: list[float] = []
        streak = 0
        previous: Optional[float] = None

        if self.k_max == 0:
            return SeriesEvaluation(partial, 0, term_norms, jet, converged=False)

        for k in range(1, self.k_max + 1):
            coefficient = float(bernoulli(k))
            if coefficient == 0.0:
                continue
            term = coefficient * jet.val[k]
            term_norm = float(norm_dx(self.grid, term))
            term_norms[k] = term_norm
            partial_norm = float(norm_dx(self.grid, partial))
            if previous and term_norm > 0:
                ratio = term_norm / previous
                ratios.append(ratio)
                streak = streak + 1 if ratio > 1.0 else 0
                if streak >= _GROWTH_STREAK:
                    logger.warning("{} 在 k={} 处连续增长，比值 {}", self.name, k, ratios[-3:])
                    raise NonDecayingSeries(k, ratios)
            partial = partial + term
            if term_norm <= self.tol * partial_norm or (term_norm == 0.0 and partial_norm == 0.0):
                logger.trace("{} 在 k={} 处截断", self.name, k)
                return SeriesEvaluation(partial, k, term_norms, jet)
            previous = term_norm

        logger.warning("{} 在 k_max={} 内未达到相对容差 {:.1e}，返回部分和", self.name, self.k_max, self.tol)
        return SeriesEvaluation(partial, self.k_max, term_norms, jet, converged=False)

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        return self.resolve(u).value

    def jvp(self, u, v) -> np.ndarray:
        u = as_state(self.grid, u)
        v = as_state(self.grid, v, "v")
        evaluation = self.resolve(u, v[None, :])
        tangents = evaluation.jet.tan[0]
        total = tangents[0].copy()
        for k in range(1, evaluation.truncation + 1):
            coefficient = float(bernoulli(k))
            if coefficient != 0.0:
                total = total + coefficient * tangents[k]
        return total

    def term_norms(self, u) -> dict[int, float]:
        """不做截断与判定，返回 k ≤ k_max 的所有非零系数项的范数（探针用）。"""
        u = as_state(self.grid, u)
        jet = self.expand(u, self.k_max)
        norms = {}
        for k in range(self.k_max + 1):
            coefficient = float(bernoulli(k))
            if coefficient != 0.0:
                norms[k] = float(norm_dx(self.grid, coefficient * jet.val[k]))
        return norms


def ad_series(
    generator: FieldOperator,
    field: FieldOperator,
    tol: float = DEFAULT_TOL,
    k_max: int = DEFAULT_K_MAX,
) -> AdSeriesField:
    """Σ_k (B_k/k!)·ad_G^k Y 作为一个新的向量场。

    k_max = 0 时只保留首项 Y。k_max 内未达到容差时返回 k_max 处的部分和；
    只有连续三个项比值大于 1 才抛出 NonDecayingSeries。
    """
    return AdSeriesField(generator, field, tol=tol, k_max=k_max)


def _bracket_weights(truncation: int) -> np.ndarray:
    """w[α, β]：二阶项中 [g_α, g_β] 的系数（已乘 α!β!）。"""
    order = max(2 * truncation - 1, 0)
    weights = np.zeros((order + 1, truncation))
    for k in range(1, truncation + 1):
        bk = float(bernoulli(k)) / factorial(k)
        if bk == 0.0:
            continue
        for b in range(k):
            beta = k - 1 - b
            binom = comb(k, b + 1)
            for kp in range(truncation + 1):
                bkp = float(bernoulli(kp)) / factorial(kp)
                if bkp == 0.0:
                    continue
                alpha = b + kp
                weights[alpha, beta] += bk * binom * bkp * factorial(alpha) * factorial(beta)
    return weights


class QuadraticSeriesField(FieldOperator):
    """复合流生成元中 Y 的二次项 Z₂（次数 2d − 1）。

    截断阶与同一点上一阶级数 `first` 的截断阶一致。
    """

    def __init__(self, first: AdSeriesField, name: Optional[str] = None):
        degree = None if first.degree is None else 2 * first.degree - 1
        super().__init__(first.grid, degree, name or f"quadratic({first.field.name})")
        self.first = first

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        truncation = max(self.first.resolve(u).truncation, 1)
        weights = _bracket_weights(truncation)
        order = weights.shape[0] - 1

        values = self.first.expand(u, order).val
        # 方向 0..t−1：D1_β = Σ_α w[α,β] g_α；方向 t..2t−1：g_β
        mixed = np.tensordot(weights.T, values, axes=(1, 0))
        directions = np.concatenate([mixed, values[:truncation]], axis=0)
        tangents = self.first.expand(u, order, directions).tan

        total = np.zeros_like(u)
        for beta in range(truncation):
            total = total + tangents[beta, beta]
            total = total - np.tensordot(weights[:, beta], tangents[truncation + beta], axes=(0, 0))
        return -0.5 * total
