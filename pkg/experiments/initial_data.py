# experiments/initial_data.py
from typing import Literal

import numpy as np
from loguru import logger

from core.errors import ContractViolation
from lattice import GridSpec, random_state, rescale, sine_basis

InitialKind = Literal["bump", "mode", "noise"]
INITIAL_KINDS: tuple[str, ...] = ("bump", "mode", "noise")


def make_initial_state(
    kind: str,
    grid: GridSpec,
    rng: np.random.Generator,
    scale: float,
    *,
    width: float | None = None,
    mode: int = 1,
) -> np.ndarray:
    """
    初值工厂函数。

    根据 `kind` 生成一个初值并缩放到 ‖u‖_δx = scale：

    - "bump": 离散高斯包 u_ℓ = exp(−(ℓδx)²/σ²)，σ 默认为半区间长度的四分之一；
    - "mode": 单个正弦模态（第 `mode` 个 Dirichlet 本征向量）；
    - "noise": 复高斯噪声（使用传入的随机数发生器，可复现）。

    Args:
        kind: 初值种类。
        grid: 格点。
        rng: 仅 "noise" 使用的随机数发生器。
        scale: 目标范数，必须为正。

    Returns:
        complex128 状态数组。

    Raises:
        ContractViolation: 种类不被支持或参数越界。
    """
    if not scale > 0:
        raise ContractViolation(f"初值范数 scale 必须为正，收到 {scale!r}")

    logger.debug(f"生成初值: kind='{kind}', K={grid.K}, delta_x={grid.delta_x}, scale={scale}")

    if kind == "bump":
        sigma = width if width is not None else max(grid.extent / 4.0, grid.delta_x)
        state = np.exp(-(grid.positions() ** 2) / sigma**2).astype(np.complex128)
        return rescale(grid, state, scale)

    elif kind == "mode":
        if not 1 <= mode <= grid.n:
            raise ContractViolation(f"模态编号必须在 1..{grid.n} 之间，收到 {mode!r}")
        # 正弦基矩阵的第 mode 行就是第 mode 个本征向量
        state = sine_basis(grid.n)[mode - 1].astype(np.complex128)
        return rescale(grid, state, scale)

    elif kind == "noise":
        return random_state(grid, rng, scale)

    else:
        logger.error(f"Unsupported initial data kind: '{kind}'")
        raise ContractViolation(f"不支持的初值种类: '{kind}'（可选 {', '.join(INITIAL_KINDS)}）")
