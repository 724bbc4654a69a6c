# cli/models.py
import math
from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from bea import CflSpec
from core.errors import ConfigError
from lattice import GridSpec, ModelParams
from stepper import SolverParams


class Command(str, Enum):
    SIMULATE = "simulate"
    DRIFT = "drift"
    DEFECT_ORDER = "defect-order"
    SYMPLECTIC_CHECK = "symplectic-check"
    STABILITY = "stability"
    CFL = "cfl"
    SPECTRUM_CHECK = "spectrum-check"
    CONVERGENCE = "convergence"


# 各命令必须显式给出的配置项（按报告顺序）
REQUIRED_KEYS: dict[Command, tuple[str, ...]] = {
    Command.SIMULATE: ("K", "delta_x", "r", "h", "T"),
    Command.DRIFT: ("K", "delta_x", "r", "h", "T"),
    Command.DEFECT_ORDER: ("K", "delta_x", "r", "h_values", "N"),
    Command.SYMPLECTIC_CHECK: ("K", "delta_x", "r", "h"),
    Command.STABILITY: ("K", "delta_x", "r", "h", "epsilon", "kappa", "N"),
    Command.CFL: ("delta_x", "r", "N"),
    Command.SPECTRUM_CHECK: ("K", "delta_x"),
    Command.CONVERGENCE: ("K", "delta_x", "r", "T", "h_values"),
}


class RunConfig(BaseModel):
    """
    一次运行的完整配置模型。

    所有数值在进入任何计算之前完成校验；未知配置项直接拒绝。
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    command: Command
    outdir: Optional[Path] = None

    # 格点与模型
    K: Optional[int] = Field(None, ge=1)
    delta_x: Optional[float] = Field(None, gt=0)
    r: Optional[int] = Field(None, ge=1)
    lam: int = Field(1, alias="lambda")

    # 推进器
    h: Optional[float] = Field(None, gt=0)
    fp_tol: float = Field(1e-13, gt=0)
    max_iters: int = Field(200, ge=1)
    ref_tol: float = Field(1e-12, gt=0)
    accelerate: bool = False

    # 研究参数
    eps_tilde: float = Field(math.pi / 2, gt=0, lt=math.pi)
    T: Optional[float] = Field(None, gt=0)
    h_values: Optional[List[float]] = None
    epsilon: Optional[float] = Field(None, gt=0)
    kappa: Optional[float] = Field(None, gt=0, lt=0.5)
    N: Optional[int] = Field(None, ge=0, le=1)
    seed: int = Field(0, ge=0)
    init: Literal["bump", "mode", "noise"] = "bump"
    init_scale: float = Field(0.5, gt=0)
    stride: int = Field(1, ge=1)
    horizon_cap: int = Field(10_000_000, ge=1)

    @field_validator("lam")
    @classmethod
    def _lambda_sign(cls, value):
        if value not in (-1, 0, 1):
            raise ValueError("lambda 必须属于 {-1, 0, 1}")
        return value

    @field_validator("h_values", mode="before")
    @classmethod
    def _split_h_values(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("h_values")
    @classmethod
    def _positive_h_values(cls, value):
        if value is not None and (not value or any(not h > 0 for h in value)):
            raise ValueError("h_values 必须是逗号分隔的正数列表")
        return value

    def require(self) -> "RunConfig":
        """检查当前命令的必填项，缺失时以第一个缺失的键报错。"""
        for key in REQUIRED_KEYS[self.command]:
            if getattr(self, key) is None:
                raise ConfigError(key, f"命令 '{self.command.value}' 需要该配置项")
        return self

    # --- 领域对象 ---
    def grid(self) -> GridSpec:
        return GridSpec(self.K, self.delta_x)

    def model(self) -> ModelParams:
        return ModelParams(self.lam, self.r)

    def solver(self, h: Optional[float] = None) -> SolverParams:
        return SolverParams(
            h=h if h is not None else self.h,
            fp_tol=self.fp_tol,
            max_iters=self.max_iters,
            ref_tol=self.ref_tol,
            accelerate=self.accelerate,
        )

    def cfl_spec(self) -> CflSpec:
        return CflSpec(self.N, self.r, self.eps_tilde)

    def inputs(self) -> dict:
        """写入清单的输入（不含输出目录）。"""
        return self.model_dump(mode="json", by_alias=True, exclude={"outdir"}, exclude_none=True)


def build_config(values: dict) -> RunConfig:
    """把原始键值对校验为 RunConfig；pydantic 的校验错误转换为指明键名的 ConfigError。"""
    try:
        return RunConfig.model_validate(values).require()
    except ValidationError as exc:
        error = exc.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else "command"
        if error["type"] == "extra_forbidden":
            raise ConfigError(key, "未知配置项") from None
        if error["type"] == "missing":
            raise ConfigError(key, "缺少必填配置项") from None
        raise ConfigError(key, error["msg"]) from None
