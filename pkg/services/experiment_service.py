# coding: utf-8
"""
模拟实验
对一个场景生成多次重复的数据集，运行各方法并汇总为长表
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import pandas as pd

from models.errors import ConfigError
from services.cache_service import CacheService
from services.metrics_service import evaluate, summarize
from services.pipeline_service import METHODS, PipelineSettings, run_method
from services.synth_service import ScenarioConfig, generate_ensemble
from services.worker_pool import WorkerPool, ensure_pool
from utils.seeds import derive_seed

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['method', 'scenario', 'case', 'n', 'a_size', 'metric', 'mean', 'sd']
REPLICATE_COLUMNS = ['replicate', 'method', 'metric', 'value']
METRIC_ORDER = ['delta_z', 'delta_alpha', 'delta_theta', 'procrustes_z', 'tpr', 'fpr']


@dataclass(frozen=True)
class SimulationPlan:
    """一次模拟实验的完整描述"""

    scenario: ScenarioConfig
    settings: PipelineSettings
    replicates: int = 10
    methods: Tuple[str, ...] = METHODS

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigError(f'重复次数至少为 1, 实际为 {self.replicates}')
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f'未知的方法: {", ".join(unknown)}')

    def to_dict(self) -> dict:
        s = self.settings
        return {
            'scenario': self.scenario.to_dict(),
            'fit': s.fit.to_dict(),
            'detect': {
                'replicates': s.detect.replicates,
                'sample_fraction': s.detect.sample_fraction,
                'iota': s.detect.iota,
                'lambda_policy': s.detect.lambda_policy,
                'lambda_value': s.detect.lambda_value,
                'cv_folds': s.detect.cv_folds,
            },
            'lambda_selection': s.lambda_selection,
            'lambda_value': s.lambda_value,
            'lambda_grid': list(s.lambda_grid) if s.lambda_grid else None,
            'cv_folds': s.cv_folds,
            'methods': list(self.methods),
        }


def run_replicate(plan: SimulationPlan, replicate: int) -> List[dict]:
    """
    一次重复: 生成数据集并运行全部方法

    Args:
        plan: 实验描述
        replicate: 重复编号 (从 1 开始)

    Returns:
        长表行 [{'method', 'metric', 'value', 'selected'}]
    """
    scenario = plan.scenario.with_seed(derive_seed(plan.scenario.seed, 'replicate', replicate))
    problem, truth = generate_ensemble(scenario)
    informative = truth.informative_indices

    rows = []
    for method in plan.methods:
        result = run_method(method, problem, plan.settings, informative=informative)
        selected = list(result.selected) if result.detection is not None else None
        report = evaluate(truth, result.alpha_t, result.z_t, selected)
        for metric, value in report.as_rows().items():
            rows.append({'method': method, 'metric': metric, 'value': value, 'selected': selected})
        logger.debug('重复 %d, %s: Δ_Z=%.4f', replicate, method, report.delta_z)
    logger.info('重复 %d 完成', replicate)
    return rows


def _replicate_cell(task):
    plan, replicate = task
    return replicate, run_replicate(plan, replicate)


def summarize_replicates(plan: SimulationPlan, table: pd.DataFrame) -> pd.DataFrame:
    """逐次重复的长表 -> (method, metric) 的均值与样本标准差"""
    scenario = plan.scenario
    records = []
    for method in plan.methods:
        for metric in METRIC_ORDER:
            values = table.loc[(table['method'] == method) & (table['metric'] == metric), 'value']
            if values.empty:
                continue
            mean, sd = summarize(values.tolist())
            records.append({
                'method': method,
                'scenario': scenario.size_scenario,
                'case': scenario.delta_case,
                'n': scenario.n,
                'a_size': scenario.a_size,
                'metric': metric,
                'mean': mean,
                'sd': sd,
            })
    return pd.DataFrame(records, columns=SUMMARY_COLUMNS)


def run_simulation(plan: SimulationPlan, pool: Optional[WorkerPool] = None,
                   cache: Optional[CacheService] = None,
                   rebuild_cache: bool = False) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    运行模拟实验

    Args:
        plan: 实验描述
        pool: 并行池，按重复并行
        cache: 可选的结果缓存，已完成的重复直接读取
        rebuild_cache: 清除已有缓存后重跑

    Returns:
        (汇总表, 逐次重复表)
    """
    pool = ensure_pool(pool)
    key = None
    done: Sequence[int] = []
    if cache is not None:
        key = cache.initialize(plan.to_dict(), force_rebuild=rebuild_cache)
        done = cache.completed(key, list(plan.methods))
        if done:
            logger.info('缓存中已有 %d 次重复', len(done))

    finished = set(done)
    todo = [r for r in range(1, plan.replicates + 1) if r not in finished]
    results = {r: cache.load(key, r) for r in sorted(finished) if r <= plan.replicates}

    # 每批 n_jobs 次重复，完成一批写入一批缓存
    for start in range(0, len(todo), pool.n_jobs):
        batch = [(plan, r) for r in todo[start:start + pool.n_jobs]]
        for replicate, rows in pool.map(_replicate_cell, batch):
            results[replicate] = rows
            if cache is not None:
                cache.store(key, replicate, rows)

    records = [
        {'replicate': r, 'method': row['method'], 'metric': row['metric'], 'value': row['value']}
        for r in sorted(results) for row in results[r]
        if row['method'] in plan.methods
    ]
    table = pd.DataFrame(records, columns=REPLICATE_COLUMNS)
    return summarize_replicates(plan, table), table
