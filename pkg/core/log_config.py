# core/log_config.py
import logging
import os
import sys
from typing import TextIO

from loguru import logger

_TEXT_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)


class InterceptHandler(logging.Handler):
    """把标准 `logging` 的记录（例如 scipy 的警告）转交给 loguru。"""

    def emit(self, record):
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        frame, depth = logging.currentframe(), 2
        while frame and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(level, record.getMessage())


def setup_logging(level: str | None = None, sink: TextIO | None = None):
    """
    配置 Loguru 日志系统。

    日志只写入一个流（默认 stderr）；CSV 与清单文件才是研究的产出物，标准输出保持干净。
    LOG_FORMAT="json" 时每条日志是一行 JSON，便于批量实验后机器解析。

    Args:
        level: 显式指定的日志级别；为空时读取 LOG_LEVEL（默认 INFO）。
        sink: 日志流，测试中可以换成内存缓冲。
    """
    logger.remove()

    log_level = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    log_format = os.getenv("LOG_FORMAT", "text").lower()
    stream = sink if sink is not None else sys.stderr

    if log_format == "json":
        logger.add(stream, level=log_level, serialize=True)
    else:
        logger.add(stream, level=log_level, colorize=sink is None, format=_TEXT_FORMAT)

    # numpy/scipy 的 warnings.warn 经 logging 进入同一个 sink
    logging.captureWarnings(True)
    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)

    logger.debug(f"日志系统初始化完成。日志级别: {log_level}, 日志格式: {log_format}")
