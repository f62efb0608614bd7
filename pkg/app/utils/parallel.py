import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from app.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """线程池并行映射，结果顺序与输入一致"""
    items = list(items)
    count = min(settings.worker_count(workers), max(1, len(items)))
    if count == 1:
        return [func(item) for item in items]

    logger.debug("并行执行 %d 个任务，线程数 %d", len(items), count)
    with ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(func, items))
