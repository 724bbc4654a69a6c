"""nlselab 的统一异常层级。

所有领域异常都继承自 `NlseLabError`，并携带结构化属性，
方便 CLI 把失败映射为退出码，也方便测试断言失败原因。
"""

from __future__ import annotations

from typing import Any, Sequence


class NlseLabError(RuntimeError):
    """nlselab 所有运行期异常的基类。"""


class ContractViolation(NlseLabError, ValueError):
    """输入不满足调用约定：维度不匹配、缺少次数元数据、参数越界等。"""


class NoConvergence(NlseLabError):
    """不动点迭代在允许的迭代次数内未收敛。"""

    def __init__(self, iterations: int, residual: float, tolerance: float) -> None:
        super().__init__(
            f"不动点迭代在 {iterations} 次后未收敛：残差 {residual:.3e} > 容差 {tolerance:.3e}"
            "（时间步可能过大）"
        )
        self.iterations = iterations
        self.residual = residual
        self.tolerance = tolerance


class StiffnessError(NlseLabError):
    """参考积分器的步长下溢。"""

    def __init__(self, time: float, message: str) -> None:
        super().__init__(f"参考流在 t={time:.6g} 处失败：{message}")
        self.time = time
        self.message = message


class NonDecayingSeries(NlseLabError):
    """Bernoulli ad 级数的项不衰减（通常意味着违反 CFL 条件）。"""

    def __init__(self, k: int, ratios: Sequence[float]) -> None:
        tail = ", ".join(f"{r:.3g}" for r in list(ratios)[-3:])
        super().__init__(f"ad 级数在 k={k} 处未衰减，最近的项比值: [{tail}]")
        self.k = k
        self.ratios = list(ratios)


class CflViolation(NlseLabError):
    """时间步违反修正能量的 CFL 条件。"""

    def __init__(self, h: float, h_max: float, spec: Any) -> None:
        super().__init__(f"h={h:.6g} 违反 CFL 条件，{spec} 允许的最大步长为 h_max={h_max:.6g}")
        self.h = h
        self.h_max = h_max
        self.spec = spec


class IllConditionedFit(NlseLabError):
    """余项提取的多项式拟合残差过大。"""

    def __init__(self, residual: float, tolerance: float) -> None:
        super().__init__(f"ε 多项式拟合残差 {residual:.3e} 超过容差 {tolerance:.3e}，请调整 ε 模板")
        self.residual = residual
        self.tolerance = tolerance


class FloorReached(NlseLabError):
    """缺陷已触及舍入误差下限，斜率拟合没有意义。"""

    def __init__(self, min_defect: float, floor: float) -> None:
        super().__init__(
            f"最小缺陷 {min_defect:.3e} 已低于舍入下限 {floor:.3e}，请增大初值范数 ‖u0‖"
        )
        self.min_defect = min_defect
        self.floor = floor


class Unsupported(NlseLabError):
    """请求的 Z 指标或向量场结构超出支持范围。"""

    def __init__(self, what: str) -> None:
        super().__init__(f"不支持: {what}")
        self.what = what


class StudyAborted(NlseLabError):
    """研究在某一步因推进器错误而中止，携带已完成的部分记录。"""

    def __init__(self, step: int, cause: Exception, partial: Sequence[Any]) -> None:
        super().__init__(f"研究在第 {step} 步中止：{cause}")
        self.step = step
        self.cause = cause
        self.partial = list(partial)


class ConfigError(NlseLabError, ValueError):
    """配置被拒绝，`key` 指明出问题的配置项。"""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"配置项 '{key}': {message}")
        self.key = key
        self.message = message
