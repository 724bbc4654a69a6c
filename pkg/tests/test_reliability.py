import importlib
import io
import json
import logging
from pathlib import Path

import pytest
from loguru import logger

from config import settings
from core.log_config import setup_logging
from core.reliability import ResilienceError, map_parallel, run_with_resilience


def test_run_with_resilience_retries_transient_errors():
    attempts = {"count": 0}

    def flaky():
        attempts["count"] += 1
        if attempts["count"] < 3:
            raise OSError("磁盘暂时不可用")
        return "ok"

    result = run_with_resilience("flaky write", flaky, max_attempts=3, backoff_multiplier=0.001, backoff_max=0.01)
    assert result == "ok"
    assert attempts["count"] == 3


def test_run_with_resilience_gives_up():
    def always_fails():
        raise OSError("只读文件系统")

    with pytest.raises(ResilienceError) as excinfo:
        run_with_resilience("doomed write", always_fails, max_attempts=2, backoff_multiplier=0.001, backoff_max=0.01)
    assert excinfo.value.attempts == 2
    assert isinstance(excinfo.value.last_exception, OSError)


def test_non_retryable_errors_pass_through():
    attempts = {"count": 0}

    def broken():
        attempts["count"] += 1
        raise KeyError("bad")

    with pytest.raises(KeyError):
        run_with_resilience("broken", broken, max_attempts=3, backoff_multiplier=0.001)
    assert attempts["count"] == 1


@pytest.mark.parametrize("workers", [1, 3])
def test_map_parallel_preserves_order(workers):
    items = list(range(10))
    assert map_parallel("square", lambda x: x * x, items, max_workers=workers) == [x * x for x in items]


def test_map_parallel_propagates_errors():
    def fail_on_three(x):
        if x == 3:
            raise ValueError("three")
        return x

    with pytest.raises(ValueError):
        map_parallel("fail", fail_on_three, [1, 2, 3, 4], max_workers=2)


def test_invalid_thread_count_exits(monkeypatch):
    monkeypatch.setenv("NLSELAB_THREADS", "0")
    with pytest.raises(SystemExit):
        importlib.reload(settings)
    monkeypatch.setenv("NLSELAB_THREADS", "2")
    importlib.reload(settings)
    assert settings.NLSELAB_THREADS == 2
    monkeypatch.setenv("NLSELAB_THREADS", "1")
    importlib.reload(settings)


def test_json_logs_go_to_a_single_stream(monkeypatch):
    monkeypatch.setenv("LOG_FORMAT", "json")
    monkeypatch.setenv("LOG_FILE", "ignored.log")
    buffer = io.StringIO()
    try:
        setup_logging("INFO", sink=buffer)
        logger.info("漂移研究开始")
        logging.getLogger("scipy.integrate").warning("来自标准 logging")
        records = [json.loads(line)["record"] for line in buffer.getvalue().splitlines()]
    finally:
        setup_logging("WARNING")
    messages = [record["message"] for record in records]
    assert "漂移研究开始" in messages
    assert "来自标准 logging" in messages
    assert not Path("ignored.log").exists()
