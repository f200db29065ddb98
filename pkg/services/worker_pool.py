# coding: utf-8
"""
并行执行
基于 joblib，结果按提交顺序返回，与 worker 数无关
"""
import logging
from typing import Callable, Iterable, List, Optional

from joblib import Parallel, delayed

from config import Config
from models.errors import ConfigError

logger = logging.getLogger(__name__)


class WorkerPool:
    """并行任务池"""

    def __init__(self, n_jobs: Optional[int] = None, backend: str = 'loky'):
        """
        Args:
            n_jobs: worker 数，None 时取 LSM_TRANSFER_THREADS 或物理核数
            backend: joblib 后端
        """
        if n_jobs is None:
            n_jobs = Config.worker_count()
        if n_jobs < 1:
            raise ConfigError(f'worker 数必须 >= 1, 实际为 {n_jobs}')
        self.n_jobs = n_jobs
        self.backend = backend

    @classmethod
    def serial(cls) -> 'WorkerPool':
        return cls(n_jobs=1)

    def map(self, func: Callable, items: Iterable) -> List:
        """对每个元素调用 func，返回与 items 同序的结果列表"""
        items = list(items)
        if self.n_jobs == 1 or len(items) <= 1:
            return [func(item) for item in items]
        logger.debug('并行执行 %d 个任务 (n_jobs=%d)', len(items), self.n_jobs)
        return Parallel(n_jobs=self.n_jobs, backend=self.backend)(
            delayed(func)(item) for item in items)


def ensure_pool(pool: Optional[WorkerPool]) -> WorkerPool:
    """未指定时串行执行"""
    return pool if pool is not None else WorkerPool.serial()
