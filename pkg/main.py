# main.py
import config.settings  # 导入以确保环境变量被最先加载
import sys
from typing import Optional, Sequence

from loguru import logger

from cli import Command, EXIT_ERROR, EXIT_OK, parse_config, run
from core.errors import ConfigError
from core.log_config import setup_logging

USAGE = (
    "用法: nlselab <command> [--config FILE] [--key value ...] --outdir DIR\n"
    "      nlselab --manifest FILE [--key value ...] --outdir DIR\n"
    f"命令: {', '.join(command.value for command in Command)}"
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    命令行入口。

    1.  **配置日志**: 在任何研究开始之前初始化 loguru。
    2.  **解析配置**: 配置文件与命令行参数合并、校验，失败时指明出问题的键。
    3.  **执行命令**: 交给 `cli.run`，返回值即进程退出码。
    """
    setup_logging()
    args = list(sys.argv[1:] if argv is None else argv)
    if not args or args[0] in ("-h", "--help"):
        print(USAGE)
        return EXIT_OK if args else EXIT_ERROR

    try:
        run_config = parse_config(args)
    except ConfigError as exc:
        logger.error(f"配置无效: {exc}")
        return EXIT_ERROR
    return run(run_config)


if __name__ == "__main__":
    sys.exit(main())
