"""统一的重试与并行执行模块。

该模块为研究的外围操作提供稳健性保障：

- `run_with_resilience`：执行输出写入等 I/O 操作，失败时按指数退避自动重试。
- `map_parallel`：把相互独立的轨迹（参数扫描）分发到线程池，并按输入顺序返回结果。
- 自定义异常 `ResilienceError`：多次重试后仍失败时抛出，保留最后一次异常。

实现细节：
- 使用 `tenacity` 库实现指数退避 + 最大重试次数的重试策略。
- 使用 `ThreadPoolExecutor` 实现扇出，工作线程数受 `NLSELAB_THREADS` 限制。
- 默认值来自 `config.settings`，可通过 .env 在不同机器上调优。
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, Tuple, TypeVar

from loguru import logger
from tenacity import (
    RetryError,
    retry,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from config import settings

T = TypeVar("T")
R = TypeVar("R")


class ResilienceError(RuntimeError):
    """在执行多次重试后仍失败时抛出的统一异常。"""

    def __init__(self, operation: str, attempts: int, last_exception: BaseException) -> None:
        message = f"操作 '{operation}' 在 {attempts} 次尝试后仍失败：{last_exception!s}"
        super().__init__(message)
        self.operation = operation
        self.attempts = attempts
        self.last_exception = last_exception


def run_with_resilience(
    operation_name: str,
    func: Callable[[], R],
    *,
    max_attempts: int | None = None,
    retry_exceptions: Iterable[type[BaseException]] | None = None,
    backoff_multiplier: float | None = None,
    backoff_max: float = 4.0,
) -> R:
    """在重试策略下执行给定函数。

    Args:
        operation_name: 操作名称，用于日志与错误信息。
        func: 待执行的无参函数（可通过 `lambda` 捕获上下文）。
        max_attempts: 最大尝试次数，默认读取 `NLSELAB_IO_ATTEMPTS`。
        retry_exceptions: 需要重试的异常类型集合，默认为 `(OSError,)`。
        backoff_multiplier: 指数退避的初始间隔，默认读取 `NLSELAB_IO_BACKOFF`。
        backoff_max: 指数退避的最大间隔。

    Returns:
        func 的执行结果。

    Raises:
        ResilienceError: 在允许的重试次数内仍然失败。
        其他异常: 如果异常类型不在 `retry_exceptions` 中，会直接透传给调用方。
    """
    max_attempts = max_attempts or settings.NLSELAB_IO_ATTEMPTS
    backoff_multiplier = backoff_multiplier or settings.NLSELAB_IO_BACKOFF
    retry_exception_types: Tuple[type[BaseException], ...] = tuple(retry_exceptions or (OSError,))

    def _log_retry(retry_state) -> None:
        logger.warning(
            "[{operation}] 第 {attempt} 次执行失败，将在 {sleep:.2f} 秒后重试：{error}",
            operation=operation_name,
            attempt=retry_state.attempt_number,
            sleep=retry_state.next_action.sleep,
            error=retry_state.outcome.exception(),
        )

    @retry(
        stop=stop_after_attempt(max_attempts),
        wait=wait_exponential(multiplier=backoff_multiplier, max=backoff_max),
        retry=retry_if_exception_type(retry_exception_types),
        before_sleep=_log_retry,
    )
    def _call_with_retry() -> R:
        return func()

    try:
        return _call_with_retry()
    except RetryError as retry_exc:
        last_exception = retry_exc.last_attempt.exception() or RuntimeError("未知原因导致的失败")
        logger.error(
            "[{operation}] 在 {attempts} 次尝试后失败：{error}",
            operation=operation_name,
            attempts=max_attempts,
            error=last_exception,
        )
        raise ResilienceError(operation_name, max_attempts, last_exception) from last_exception


def map_parallel(
    operation_name: str,
    func: Callable[[T], R],
    items: Sequence[T],
    *,
    max_workers: int | None = None,
) -> list[R]:
    """把 `func` 应用到每个 `items` 元素上，结果按输入顺序返回。

    单线程配置时直接顺序执行，不创建线程池。任何一个任务的异常都会原样抛给调用方。
    """
    workers = min(max_workers or settings.NLSELAB_THREADS, max(len(items), 1))
    logger.debug(
        "[{operation}] 分发 {count} 个任务，线程数 {workers}",
        operation=operation_name,
        count=len(items),
        workers=workers,
    )
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="nlselab") as executor:
        return list(executor.map(func, items))
