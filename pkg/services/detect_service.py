# coding: utf-8
"""
可迁移集合检测
每个源网络单独做两阶段迁移，与 one-mode 基线比较留出节点对上的预测损失
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
import pandas as pd

from models.errors import ConfigError, EmptyHoldoutError, LatentSpaceError
from models.graph import Graph, PairSet, as_pairs, pairs_to_mask, upper_pairs
from models.latent import DebiasConfig, FitConfig, TransferProblem
from services.debias_service import (
    CVConfig,
    default_lambda,
    default_lambda_grid,
    fit_debias,
    select_lambda,
)
from services.lsm_service import MaskLike, fit_single, observation_weights
from services.transfer_service import fit_transfer
from services.worker_pool import WorkerPool, ensure_pool
from utils.core_math import build_theta, heldout_nll, log_odds
from utils.seeds import derive_seed

logger = logging.getLogger(__name__)

LAMBDA_POLICIES = ('reuse', 'per_replicate', 'fixed')


@dataclass(frozen=True)
class DetectConfig:
    """检测参数"""

    replicates: int = 3
    sample_fraction: float = 0.8
    iota: float = 0.5
    lambda_policy: str = 'fixed'
    lambda_value: Optional[float] = None  # fixed 策略下的 λ，None 表示 lambda_scale·n
    lambda_scale: float = 1.0
    lambda_grid: Optional[Tuple[float, ...]] = None
    cv_folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 2:
            raise ConfigError(f'重复次数至少为 2 (需要估计标准差), 实际为 {self.replicates}')
        if not 0 < self.sample_fraction < 1:
            raise ConfigError(f'sample_fraction 必须在 (0, 1) 内, 实际为 {self.sample_fraction}')
        if self.iota < 0:
            raise ConfigError(f'iota 不能为负, 实际为 {self.iota}')
        if self.lambda_policy not in LAMBDA_POLICIES:
            raise ConfigError(f'未知的 λ 策略: {self.lambda_policy}')
        if self.lambda_scale <= 0:
            raise ConfigError(f'lambda_scale 必须为正, 实际为 {self.lambda_scale}')
        if self.lambda_grid is not None:
            object.__setattr__(self, 'lambda_grid', tuple(float(v) for v in self.lambda_grid))

    @classmethod
    def from_config(cls, config_class, **overrides):
        values = {
            'replicates': config_class.DETECT_REPLICATES,
            'sample_fraction': config_class.DETECT_FRACTION,
            'iota': config_class.DETECT_IOTA,
            'lambda_policy': config_class.DETECT_LAMBDA_POLICY,
            'lambda_scale': config_class.DETECT_LAMBDA_SCALE,
            'lambda_grid': config_class.LAMBDA_GRID,
            'cv_folds': config_class.CV_FOLDS,
            'seed': config_class.SEED,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def fixed_lambda(self, n: int) -> float:
        if self.lambda_value is not None:
            return float(self.lambda_value)
        return default_lambda(n, self.lambda_scale)


def selection_bound(iota: float, sigma_hat: float) -> float:
    """ι·σ̂，ι 为无穷大时直接返回无穷大"""
    if np.isinf(iota):
        return np.inf
    return iota * sigma_hat


@dataclass
class DetectionReport:
    """检测结果"""

    names: Tuple[str, ...]
    per_source_loss: np.ndarray
    baseline_loss: float
    sigma_hat: float
    iota: float
    selected: FrozenSet[int]
    failed: FrozenSet[int] = frozenset()
    details: pd.DataFrame = field(default_factory=pd.DataFrame)
    lambdas: Dict[str, List[float]] = field(default_factory=dict)

    def threshold(self, iota: float) -> FrozenSet[int]:
        """用新的 ι 重新筛选，不重新拟合"""
        if iota < 0:
            raise ConfigError(f'iota 不能为负, 实际为 {iota}')
        bound = selection_bound(iota, self.sigma_hat)
        return frozenset(
            l for l, loss in enumerate(self.per_source_loss)
            if l not in self.failed and loss - self.baseline_loss <= bound
        )

    @property
    def selected_names(self) -> List[str]:
        return [self.names[l] for l in sorted(self.selected)]

    def to_dict(self) -> dict:
        return {
            'sources': [
                {
                    'name': name,
                    'loss': None if l in self.failed else float(self.per_source_loss[l]),
                    'excess': None if l in self.failed
                    else float(self.per_source_loss[l] - self.baseline_loss),
                    'selected': l in self.selected,
                    'failed': l in self.failed,
                    'lambda': self.lambdas.get(name, []),
                }
                for l, name in enumerate(self.names)
            ],
            'baseline_loss': float(self.baseline_loss),
            'sigma_hat': float(self.sigma_hat),
            'iota': float(self.iota),
            'selected': self.selected_names,
        }


def sample_pairs(n: int, fraction: float, seed: int, observed: MaskLike = None) -> np.ndarray:
    """
    不放回地均匀抽取 ⌊fraction·m⌋ 个非对角节点对

    Args:
        n: 节点数
        fraction: 抽样比例
        seed: 随机种子
        observed: 可选掩码，只在其中已观测的节点对里抽样 (m 为已观测节点对数)

    Returns:
        n×n 对称布尔掩码，对角线为 False；True 为抽中的 (训练) 节点对
    """
    if not 0 < fraction < 1:
        raise ConfigError(f'fraction 必须在 (0, 1) 内, 实际为 {fraction}')
    if observed is None:
        rows, cols = upper_pairs(n)
    else:
        rows, cols = np.nonzero(np.triu(observation_weights(observed, n) > 0, 1))
    size = int(np.floor(fraction * rows.size))
    chosen = np.random.default_rng(seed).choice(rows.size, size=size, replace=False)
    return pairs_to_mask(n, (rows[chosen], cols[chosen]))


def holdout_loss(graph: Graph, theta_hat: np.ndarray, heldout) -> float:
    """
    留出节点对上的负对数似然

    Args:
        graph: 目标网络
        theta_hat: 估计的对数几率矩阵
        heldout: 节点对集合 (元组、(m,2) 数组或布尔掩码)
    """
    pairs = as_pairs(heldout, graph.n)
    return heldout_nll(graph.adj, theta_hat, pairs)


def _heldout_of(sampled: np.ndarray, observed: MaskLike) -> PairSet:
    n = sampled.shape[0]
    base = np.ones((n, n), dtype=bool) if observed is None else observation_weights(observed, n) > 0
    rows, cols = np.nonzero(np.triu(base & ~sampled, 1))
    if rows.size == 0:
        raise EmptyHoldoutError('抽样后没有留出的节点对')
    return rows, cols


def _transfer_cell(task):
    problem, l, fit_cfg = task
    try:
        return True, fit_transfer(problem.subset([l]), fit_cfg)
    except LatentSpaceError as e:
        return False, str(e)


def _lambda_cell(task):
    target, u0, grid, cv, debias_cfg, mask = task
    try:
        return True, select_lambda(target, u0, grid, cv, cfg=debias_cfg, mask=mask)
    except LatentSpaceError as e:
        return False, str(e)


def _loss_cell(task):
    kind, target, u0, cfg, mask, heldout = task
    try:
        if kind == 'baseline':
            theta = log_odds(fit_single(target, cfg, mask).state)
        else:
            result = fit_debias(target, u0, cfg, mask)
            theta = build_theta(result.alpha_t, result.z_t)
        return True, holdout_loss(target, theta, heldout)
    except LatentSpaceError as e:
        return False, str(e)


def detect_transferable(problem: TransferProblem, cfg: DetectConfig,
                        fit_cfg: Optional[FitConfig] = None,
                        debias_cfg: Optional[DebiasConfig] = None,
                        observed: MaskLike = None,
                        pool: Optional[WorkerPool] = None) -> DetectionReport:
    """
    可迁移集合检测

    Args:
        problem: 迁移问题 (至少一个源网络)
        cfg: 检测参数
        fit_cfg: 迁移阶段与基线的拟合参数
        debias_cfg: 去偏阶段参数 (lam 按 cfg.lambda_policy 覆盖)
        observed: 目标网络的观测掩码，检测只在观测到的节点对上抽样
        pool: 并行池

    Returns:
        DetectionReport
    """
    if problem.size == 0:
        raise ConfigError('检测至少需要一个源网络')
    fit_cfg = fit_cfg or FitConfig()
    debias_cfg = debias_cfg or DebiasConfig.from_fit(fit_cfg, 1.0)
    pool = ensure_pool(pool)
    target = problem.target
    n = problem.n
    names = problem.names
    R = cfg.replicates

    # 迁移阶段只依赖源网络，与目标掩码无关，每个源网络只拟合一次
    transfer_results = pool.map(_transfer_cell, [(problem, l, fit_cfg) for l in range(problem.size)])
    failures: Dict[int, str] = {}
    u0s: Dict[int, np.ndarray] = {}
    for l, (ok, payload) in enumerate(transfer_results):
        if ok:
            u0s[l] = payload.u0
        else:
            failures[l] = payload
            logger.warning('源网络 %s 迁移阶段失败: %s', names[l], payload)

    masks = [sample_pairs(n, cfg.sample_fraction, derive_seed(cfg.seed, 'mask', r), observed)
             for r in range(R)]
    heldouts = [_heldout_of(mask, observed) for mask in masks]

    # λ^{(l, r)}
    lambdas: Dict[int, List[float]] = {}
    grid = cfg.lambda_grid or tuple(default_lambda_grid(n))
    if cfg.lambda_policy == 'fixed':
        for l in u0s:
            lambdas[l] = [cfg.fixed_lambda(n)] * R
    else:
        reps = range(R) if cfg.lambda_policy == 'per_replicate' else range(1)
        keys = [(l, r) for l in sorted(u0s) for r in reps]
        tasks = [(target, u0s[l], grid,
                  CVConfig(folds=cfg.cv_folds, seed=derive_seed(cfg.seed, 'cv', names[l], r)),
                  debias_cfg, masks[r]) for l, r in keys]
        chosen: Dict[Tuple[int, int], float] = {}
        for key, (ok, payload) in zip(keys, pool.map(_lambda_cell, tasks)):
            if ok:
                chosen[key] = payload
            else:
                failures.setdefault(key[0], payload)
        for l in sorted(u0s):
            if l in failures:
                continue
            if cfg.lambda_policy == 'per_replicate':
                lambdas[l] = [chosen[(l, r)] for r in range(R)]
            else:
                lambdas[l] = [chosen[(l, 0)]] * R

    # (l, r) 拟合网格，基线用 l = -1
    cells = [(-1, r) for r in range(R)]
    cells += [(l, r) for l in sorted(lambdas) for r in range(R)]
    tasks = []
    for l, r in cells:
        if l < 0:
            tasks.append(('baseline', target, None, fit_cfg, masks[r], heldouts[r]))
        else:
            tasks.append(('debias', target, u0s[l], debias_cfg.with_lambda(lambdas[l][r]),
                          masks[r], heldouts[r]))
    outcomes = pool.map(_loss_cell, tasks)

    rows = []
    baseline = np.full(R, np.nan)
    losses = np.full((problem.size, R), np.nan)
    for (l, r), (ok, payload) in zip(cells, outcomes):
        name = 'baseline' if l < 0 else names[l]
        if not ok:
            if l < 0:
                raise LatentSpaceError(f'第 {r + 1} 次重复的基线拟合失败: {payload}')
            failures.setdefault(l, payload)
            logger.warning('源网络 %s 第 %d 次重复失败: %s', name, r + 1, payload)
        elif l < 0:
            baseline[r] = payload
        else:
            losses[l, r] = payload
        rows.append({
            'replicate': r + 1,
            'source': name,
            'lam': None if l < 0 else lambdas[l][r],
            'loss': payload if ok else None,
            'status': 'ok' if ok else 'failed',
        })

    per_source = np.array([np.nan if l in failures else losses[l].mean()
                           for l in range(problem.size)])
    baseline_loss = float(baseline.mean())
    sigma_hat = float(np.std(baseline, ddof=1))

    report = DetectionReport(
        names=names,
        per_source_loss=per_source,
        baseline_loss=baseline_loss,
        sigma_hat=sigma_hat,
        iota=cfg.iota,
        selected=frozenset(),
        failed=frozenset(failures),
        details=pd.DataFrame(rows, columns=['replicate', 'source', 'lam', 'loss', 'status']),
        lambdas={names[l]: [float(v) for v in values] for l, values in lambdas.items()},
    )
    report.selected = report.threshold(cfg.iota)
    logger.info('检测完成: 基线损失 %.4f, σ̂=%.4f, 选中 %d/%d 个源网络',
                baseline_loss, sigma_hat, len(report.selected), problem.size)
    return report
