import os

import numpy as np
import pytest

# --- 默认测试环境变量设置 ---
os.environ.setdefault("NLSELAB_THREADS", "1")
os.environ.setdefault("NLSELAB_IO_ATTEMPTS", "2")
os.environ.setdefault("NLSELAB_IO_BACKOFF", "0.01")
os.environ.setdefault("LOG_LEVEL", "WARNING")

from lattice import GridSpec, ModelParams  # noqa: E402  环境变量需先于项目模块设置


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="运行耗时较长的验收测试")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 耗时较长的验收测试，需要 --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    """固定种子的随机数发生器，保证测试可复现。"""
    return np.random.Generator(np.random.PCG64(20240607))


@pytest.fixture
def small_grid():
    return GridSpec(4, 0.25)


@pytest.fixture
def cubic():
    return ModelParams(1, 1)


@pytest.fixture
def linear():
    return ModelParams(0, 1)
