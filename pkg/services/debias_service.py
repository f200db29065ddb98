# coding: utf-8
"""
去偏阶段
目标网络上的核范数惩罚拟合: Z^t = u0 + Δ，Δ 经近端梯度得到
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from models.errors import ConfigError, DimensionMismatchError, EmptyGridError
from models.graph import Graph, pairs_to_mask, upper_pairs
from models.latent import DebiasConfig, DebiasResult
from services.lsm_service import MaskLike, degree_alpha, observation_weights
from services.optim import GradientSolver, z_step_scale
from services.worker_pool import WorkerPool, ensure_pool
from utils.core_math import (
    build_theta,
    center_rows,
    heldout_nll,
    nll,
    nuclear_norm,
    prox_nuclear,
    theta_residual,
)

logger = logging.getLogger(__name__)

# 默认 λ 网格: [1e-2, 1e2]·√n 上 11 个对数等距点
GRID_SIZE = 11
GRID_LOW = 1e-2
GRID_HIGH = 1e2


@dataclass(frozen=True)
class CVConfig:
    """节点对交叉验证参数"""

    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError(f'交叉验证折数至少为 2, 实际为 {self.folds}')


def default_lambda_grid(n: int) -> np.ndarray:
    return np.sqrt(n) * np.logspace(np.log10(GRID_LOW), np.log10(GRID_HIGH), GRID_SIZE)


def default_lambda(n: int, scale: float) -> float:
    """未指定 λ 时的取值 scale·n"""
    if scale <= 0:
        raise ConfigError(f'λ 的比例系数必须为正, 实际为 {scale}')
    return float(scale * n)


def penalized_objective(graph: Graph, u0: np.ndarray, alpha_t: np.ndarray, delta: np.ndarray,
                        lam: float, mask: MaskLike = None) -> float:
    """
    nll(graph, θ(α_t, u0 + Δ)) + λ‖Δ‖_*

    Args:
        graph: 目标网络
        u0: 共享潜在块 n×k
        alpha_t: 目标网络 α
        delta: 修正项 n×k
        lam: 核范数惩罚系数
        mask: 可选观测掩码

    Returns:
        float
    """
    u0 = np.asarray(u0, dtype=float)
    delta = np.asarray(delta, dtype=float)
    alpha_t = np.asarray(alpha_t, dtype=float)
    n = graph.n
    if u0.shape != delta.shape or u0.shape[0] != n or alpha_t.shape != (n,):
        raise DimensionMismatchError(
            f'形状不一致: u0 {u0.shape}, delta {delta.shape}, alpha {alpha_t.shape}, n={n}')
    weights = observation_weights(mask, n)
    smooth = nll(graph.adj, build_theta(alpha_t, u0 + delta), weights)
    return smooth + lam * nuclear_norm(delta)


def fit_debias(graph: Graph, u0: np.ndarray, cfg: DebiasConfig,
               mask: MaskLike = None) -> DebiasResult:
    """
    去偏阶段拟合

    每次迭代: α 梯度步；Δ 梯度步后做奇异值软阈值 (阈值 = 步长·λ)，再列中心化

    Args:
        graph: 目标网络
        u0: 迁移阶段得到的共享潜在块，未中心化时先中心化
        cfg: 拟合参数与 λ
        mask: 可选观测掩码

    Returns:
        DebiasResult
    """
    n = graph.n
    u0 = np.asarray(u0, dtype=float)
    if u0.ndim != 2 or u0.shape[0] != n:
        raise DimensionMismatchError(f'u0 形状 {u0.shape} 与目标网络 n={n} 不一致')
    u0 = center_rows(u0)
    adj = np.asarray(graph.adj, dtype=float)
    weights = observation_weights(mask, n)
    lam = cfg.lam

    def objective(blocks):
        alpha, delta = blocks
        return nll(adj, build_theta(alpha, u0 + delta), weights) + lam * nuclear_norm(delta)

    def gradient(blocks):
        alpha, delta = blocks
        z = u0 + delta
        resid = theta_residual(adj, build_theta(alpha, z), weights)
        return [2.0 * resid.sum(axis=1), 2.0 * resid @ z]

    def project(blocks, steps):
        return [blocks[0], center_rows(prox_nuclear(blocks[1], steps[1] * lam))]

    alpha0 = degree_alpha(adj, weights)
    delta0 = np.zeros_like(u0)
    resid0 = theta_residual(adj, build_theta(alpha0, u0), weights)
    scales = [cfg.step_alpha / n, z_step_scale(cfg.step_z, resid0, u0)]

    solver = GradientSolver(cfg, objective, gradient, project, name='fit_debias')
    outcome = solver.run([alpha0, delta0], scales)
    alpha, delta = outcome.blocks

    logger.info('去偏阶段完成: λ=%.4g, ‖Δ‖_*=%.4f, 迭代 %d 次, 收敛=%s',
                lam, nuclear_norm(delta), outcome.iterations, outcome.converged)
    return DebiasResult(alpha_t=alpha, delta=delta, z_t=u0 + delta,
                        objective_trace=outcome.objective_trace,
                        iterations=outcome.iterations,
                        converged=outcome.converged,
                        lam=lam)


def pair_folds(n: int, folds: int, seed: int, mask: MaskLike = None):
    """
    把 (观测到的) 非对角节点对随机分成 folds 份

    Returns:
        list of (rows, cols)
    """
    if mask is None:
        rows, cols = upper_pairs(n)
    else:
        weights = observation_weights(mask, n)
        rows, cols = np.nonzero(np.triu(weights > 0, 1))
    if rows.size < folds:
        raise ConfigError(f'可用节点对 {rows.size} 少于交叉验证折数 {folds}')
    order = np.random.default_rng(seed).permutation(rows.size)
    return [(rows[part], cols[part]) for part in np.array_split(order, folds)]


def _cv_cell(task):
    graph, u0, cfg, lam, base, heldout = task
    observed = base & ~pairs_to_mask(graph.n, heldout)
    result = fit_debias(graph, u0, cfg.with_lambda(lam), observed)
    theta = build_theta(result.alpha_t, result.z_t)
    return heldout_nll(graph.adj, theta, heldout)


def select_lambda(graph: Graph, u0: np.ndarray, grid: Sequence[float],
                  folds: Union[int, CVConfig] = 5, seed: int = 0,
                  cfg: Optional[DebiasConfig] = None, mask: MaskLike = None,
                  pool: Optional[WorkerPool] = None,
                  return_table: bool = False) -> Union[float, Tuple[float, pd.DataFrame]]:
    """
    节点对 V 折交叉验证选择 λ

    每折留出 1/V 的节点对，在其余节点对上拟合，用留出节点对的负对数似然打分；
    取平均损失最小的 λ，并列时取较大的 λ。

    Args:
        graph: 目标网络
        u0: 共享潜在块
        grid: 候选 λ
        folds: 折数或 CVConfig
        seed: 划分节点对的种子 (folds 为 CVConfig 时以其为准)
        cfg: 拟合参数 (lam 字段被覆盖)
        mask: 可选观测掩码，只在观测到的节点对上划分
        pool: 并行池
        return_table: 同时返回每个 (λ, 折) 的损失表

    Returns:
        λ 或 (λ, DataFrame[lam, fold, loss])
    """
    if isinstance(folds, CVConfig):
        cv = folds
    else:
        cv = CVConfig(folds=int(folds), seed=seed)
    values = sorted({float(value) for value in grid})
    if not values:
        raise EmptyGridError('候选 λ 网格为空')
    if any(value < 0 for value in values):
        raise ConfigError('候选 λ 不能为负')
    if len(values) == 1:
        if return_table:
            return values[0], pd.DataFrame(columns=['lam', 'fold', 'loss'])
        return values[0]

    cfg = cfg or DebiasConfig()
    n = graph.n
    base = np.ones((n, n), dtype=bool) if mask is None else observation_weights(mask, n) > 0
    np.fill_diagonal(base, False)
    splits = pair_folds(n, cv.folds, cv.seed, base)

    tasks = [(graph, u0, cfg, lam, base, heldout) for lam in values for heldout in splits]
    losses = ensure_pool(pool).map(_cv_cell, tasks)

    table = pd.DataFrame({
        'lam': [lam for lam in values for _ in splits],
        'fold': [v for _ in values for v in range(len(splits))],
        'loss': losses,
    })
    means = table.groupby('lam', sort=True)['loss'].mean()
    # 逆序遍历，argmin 取第一个，并列时较大 λ 胜出
    reversed_means = means.iloc[::-1]
    best = float(reversed_means.index[int(np.argmin(reversed_means.to_numpy()))])
    logger.info('交叉验证选择 λ=%.4g (%d 个候选, %d 折)', best, len(values), cv.folds)
    if return_table:
        return best, table
    return best

