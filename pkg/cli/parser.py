# cli/parser.py
"""扁平 key=value 配置与命令行参数的解析。

配置文件每行可以有一个或多个以空白分隔的 `key=value`，`#` 之后为注释。
命令行形式：`nlselab <command> [--config FILE] [--key value ...] --outdir DIR`，
命令行参数覆盖文件中的同名项；键名中的 '-' 等价于 '_'。
`--manifest FILE` 从一次运行写出的 manifest.json 取回全部输入（含种子），用于原样重跑；
同样可以被命令行参数覆盖，通常只换 `--outdir`。
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence, Union

from loguru import logger

from core.errors import ConfigError

from .models import RunConfig, build_config


def _normalize(key: str) -> str:
    return key.strip().replace("-", "_")


def parse_key_values(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        for token in line.split():
            key, sep, value = token.partition("=")
            if not sep or not key:
                raise ConfigError(token, f"第 {number} 行不是 key=value 形式")
            values[_normalize(key)] = value.strip()
    return values


def load_manifest_inputs(path: Path) -> dict[str, Any]:
    """读取 manifest.json 中记录的输入；种子以清单顶层的 `seed` 为准。"""
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError("manifest", f"无法读取清单 {path}: {exc}") from exc
    inputs = manifest.get("inputs") if isinstance(manifest, dict) else None
    if not isinstance(inputs, dict) or "command" not in inputs:
        raise ConfigError("manifest", f"清单 {path} 中没有可用的 inputs")
    values = {_normalize(key): value for key, value in inputs.items()}
    if "seed" in manifest:
        values["seed"] = manifest["seed"]
    return values


def parse_flags(argv: Sequence[str]) -> dict[str, Any]:
    """把 `[command] --key value | --key=value ...` 解析为字典（`--config` 与 `--manifest` 已展开）。"""
    values: dict[str, Any] = {}
    flags: dict[str, str] = {}
    args = list(argv)
    index = 0
    if args and not args[0].startswith("--"):
        flags["command"] = args[0]
        index = 1

    while index < len(args):
        token = args[index]
        if not token.startswith("--") or token == "--":
            raise ConfigError(token, "多余的位置参数")
        key, sep, value = token[2:].partition("=")
        if not sep:
            if index + 1 >= len(args):
                raise ConfigError(key, "缺少取值")
            value = args[index + 1]
            index += 1
        index += 1
        key = _normalize(key)
        if key == "config":
            path = Path(value)
            try:
                values.update(parse_key_values(path.read_text(encoding="utf-8")))
            except OSError as exc:
                raise ConfigError("config", f"无法读取配置文件 {path}: {exc}") from exc
            logger.debug(f"已读取配置文件: {path}")
        elif key == "manifest":
            path = Path(value)
            values.update(load_manifest_inputs(path))
            logger.debug(f"按清单重跑: {path}")
        else:
            flags[key] = value

    values.update(flags)
    return values


def parse_config(source: Union[str, Sequence[str]]) -> RunConfig:
    """
    解析并校验一份运行配置。

    Args:
        source: 配置文本（str），或命令行参数列表（不含程序名）。

    Returns:
        校验通过的 RunConfig。

    Raises:
        ConfigError: 未知键、缺失的必填键或越界取值，异常中指明出问题的键。
    """
    values = parse_key_values(source) if isinstance(source, str) else parse_flags(source)
    if "command" not in values:
        raise ConfigError("command", "缺少命令")
    return build_config(values)
