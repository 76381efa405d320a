"""
Retry utilities using tenacity.

Solver restarts run in batches; a batch without an accepted solution raises
NoFeasibleRestart and the decorator moves on to the next batch.
"""
from tenacity import (
    retry,
    stop_after_attempt,
    wait_none,
    retry_if_exception_type,
    before_sleep_log,
)

from .errors import NoFeasibleRestart
from .logger import log


def create_retry_decorator(max_attempts: int = 3):
    """
    Create a retry decorator for restart batches.

    Args:
        max_attempts: Maximum number of batches to try

    Returns:
        Configured retry decorator
    """
    return retry(
        stop=stop_after_attempt(max_attempts),
        wait=wait_none(),
        retry=retry_if_exception_type(NoFeasibleRestart),
        before_sleep=before_sleep_log(log, "WARNING"),
        reraise=True,
    )


def batch_count(restarts: int, batch_size: int) -> int:
    """Number of batches needed to cover `restarts` with `batch_size` workers."""
    batch_size = max(1, batch_size)
    return max(1, -(-restarts // batch_size))
