# experiments/fitting.py
"""log₁₀–log₁₀ 最小二乘斜率拟合。"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from loguru import logger
from scipy.stats import linregress

from core.errors import ContractViolation, FloorReached

MIN_POINTS = 4


@dataclass(frozen=True)
class SlopeEstimate:
    slope: float
    intercept: float
    r_squared: float
    h_values: np.ndarray
    defect_values: np.ndarray

    def __post_init__(self) -> None:
        if len(self.h_values) != len(self.defect_values) or len(self.h_values) < MIN_POINTS:
            raise ContractViolation(
                f"斜率拟合需要至少 {MIN_POINTS} 组等长数据，收到 {len(self.h_values)} 与 {len(self.defect_values)}"
            )
        if not 0.0 <= self.r_squared <= 1.0:
            raise ContractViolation(f"r² 越界: {self.r_squared!r}")

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "h_values": [float(h) for h in self.h_values],
            "defect_values": [float(d) for d in self.defect_values],
        }


def fit_slope(h_values: Sequence[float], defects: Sequence[float], floor: float = 0.0) -> SlopeEstimate:
    """对 (log₁₀ h, log₁₀ defect) 做普通最小二乘。

    最小缺陷不高于 `floor` 时抛出 FloorReached：此时数据已被舍入误差主导。
    """
    h = np.asarray(h_values, dtype=np.float64)
    d = np.asarray(defects, dtype=np.float64)
    if h.shape != d.shape or h.size < MIN_POINTS:
        raise ContractViolation(f"斜率拟合需要至少 {MIN_POINTS} 组等长数据")
    if np.any(h <= 0):
        raise ContractViolation("步长必须全部为正")
    smallest = float(np.min(d))
    if smallest <= floor:
        raise FloorReached(smallest, floor)

    fit = linregress(np.log10(h), np.log10(d))
    r_squared = float(min(max(fit.rvalue**2, 0.0), 1.0))
    logger.debug("log-log 拟合: slope={:.4f}, r²={:.5f}", fit.slope, r_squared)
    return SlopeEstimate(float(fit.slope), float(fit.intercept), r_squared, h, d)
