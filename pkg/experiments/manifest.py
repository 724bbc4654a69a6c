# experiments/manifest.py
"""研究清单：足以复现一次运行的全部输入、种子、容差与库版本。"""

from __future__ import annotations

import platform
from importlib import metadata
from typing import Any, Mapping

import numpy as np

RNG_ALGORITHM = "numpy.PCG64"
_TRACKED_PACKAGES = ("numpy", "scipy", "sympy", "pydantic")


def make_rng(seed: int) -> np.random.Generator:
    """具名、可播种、跨平台一致的随机数发生器。"""
    return np.random.Generator(np.random.PCG64(seed))


def library_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for package in _TRACKED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def build_manifest(
    command: str,
    inputs: Mapping[str, Any],
    *,
    seed: int,
    tolerances: Mapping[str, float],
    outputs: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    return {
        "command": command,
        "inputs": dict(inputs),
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "tolerances": dict(tolerances),
        "outputs": dict(outputs or {}),
        "versions": library_versions(),
    }
