# config/settings.py
import os
import sys
from dotenv import load_dotenv
from loguru import logger

# --- 核心功能：加载环境变量 ---
logger.debug("正在加载 .env 文件中的环境变量...")
load_dotenv()


def _read_int(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name, str(default))
    try:
        value = int(raw)
    except ValueError:
        value = minimum - 1
    if value < minimum:
        logger.error(f"错误：{name}={raw!r} 无效，必须是不小于 {minimum} 的整数。")
        logger.error(f"请在 .env 文件中修正，例如：{name}={default}")
        sys.exit(1)
    return value


def _read_float(name: str, default: float) -> float:
    raw = os.getenv(name, str(default))
    try:
        value = float(raw)
    except ValueError:
        value = -1.0
    if not value > 0:
        logger.error(f"错误：{name}={raw!r} 无效，必须是正数。")
        logger.error(f"请在 .env 文件中修正，例如：{name}={default}")
        sys.exit(1)
    return value


# --- 并行配置 ---
# 参数扫描（多条独立轨迹）使用的最大线程数
NLSELAB_THREADS = _read_int("NLSELAB_THREADS", 1, 1)

# --- 输出写入的重试策略 ---
NLSELAB_IO_ATTEMPTS = _read_int("NLSELAB_IO_ATTEMPTS", 3, 1)
NLSELAB_IO_BACKOFF = _read_float("NLSELAB_IO_BACKOFF", 0.2)

logger.debug(
    f"nlselab 配置: threads={NLSELAB_THREADS}, io_attempts={NLSELAB_IO_ATTEMPTS}, "
    f"io_backoff={NLSELAB_IO_BACKOFF}s"
)
