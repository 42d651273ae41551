import functools
import time
from typing import Any
from typing import Callable
from typing import Iterable
from typing import List
from typing import Optional

import joblib
from loguru import logger
from tqdm import tqdm


def timer(func):
    """Simple timer decorator"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        value = func(*args, **kwargs)
        end = time.perf_counter()
        logger.debug(f"{func.__name__!r} took {(end - start):.2f} seconds")

        return value

    return wrapper


def parallel_map(func: Callable, items: Iterable, n_jobs: int = 1, desc: Optional[str] = None) -> List[Any]:
    """Applies a function to every item, optionally fanning out to a joblib worker pool.

    Results always come back in input order, so downstream reports do not depend on `n_jobs`.

    Args:
        func: picklable function of one argument
        items: arguments to map over
        n_jobs: number of workers; 1 runs serially in-process
        desc: progress bar label (serial runs only)

    Returns:
        results: list of `func(item)` in the order of `items`
    """
    items = list(items)
    if n_jobs < 1:
        raise ValueError(f"`n_jobs` must be a positive integer, got {n_jobs}")

    if n_jobs == 1 or len(items) <= 1:
        return [func(item) for item in tqdm(items, desc=desc, leave=False, disable=None)]

    logger.debug(f"Dispatching {len(items)} tasks to {n_jobs} workers")
    return joblib.Parallel(n_jobs=n_jobs)(joblib.delayed(func)(item) for item in items)
