# coding: utf-8
"""
单网络潜在空间模型 (one-mode 基线)
谱初始化 + 投影梯度下降
"""
import logging
import warnings
from typing import Optional, Union

import numpy as np
from scipy.special import logit

from models.errors import ConfigError, RankDeficientWarning
from models.graph import Graph, MaskedGraph
from models.latent import FitConfig, FitResult, LatentState
from services.optim import GradientSolver, z_step_scale
from utils.core_math import build_theta, center_and_bound, center_rows, nll, theta_residual

logger = logging.getLogger(__name__)

# 特征值相对阈值，低于该值的方向视为零
EIGEN_RTOL = 1e-8

MaskLike = Union[MaskedGraph, np.ndarray, None]


def observation_weights(mask: MaskLike, n: int) -> Optional[np.ndarray]:
    """
    观测掩码 -> 似然权重

    Args:
        mask: MaskedGraph、n×n 布尔数组或 None

    Returns:
        0/1 浮点矩阵；mask 为 None 时返回 None (全部观测)
    """
    if mask is None:
        return None
    observed = mask.observed if isinstance(mask, MaskedGraph) else np.asarray(mask, dtype=bool)
    if observed.shape != (n, n):
        raise ConfigError(f'掩码形状 {observed.shape} 与网络规模 {n} 不一致')
    return observed.astype(float)


def degree_alpha(adj: np.ndarray, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """α_i = 0.5·logit(clamp(deg_i / n, 1/n, 1−1/n))，有掩码时只统计观测到的节点对"""
    n = adj.shape[0]
    if weights is None:
        density = adj.sum(axis=1) / n
    else:
        seen = np.maximum(weights.sum(axis=1), 1.0)
        density = (weights * adj).sum(axis=1) / seen
    return 0.5 * logit(np.clip(density, 1.0 / n, 1.0 - 1.0 / n))


def _surrogate(adj: np.ndarray, weights: Optional[np.ndarray]) -> np.ndarray:
    """双中心化的 logit 邻接替代矩阵；对角线和未观测节点对用经验密度填补"""
    n = adj.shape[0]
    fill = adj.copy()
    if weights is not None:
        off_diag = ~np.eye(n, dtype=bool)
        seen = weights[off_diag] > 0
        overall = adj[off_diag][seen].mean() if seen.any() else 0.5
        fill = np.where(weights > 0, adj, overall)
        np.fill_diagonal(fill, 0.0)
    np.fill_diagonal(fill, fill.sum(axis=1) / (n - 1))
    s = logit(np.clip(fill, 1.0 / n, 1.0 - 1.0 / n))
    return s - s.mean(axis=0, keepdims=True) - s.mean(axis=1, keepdims=True) + s.mean()


def spectral_init(graph: Graph, k: int, mask: MaskLike = None) -> LatentState:
    """
    谱初始化

    Z 取双中心化替代矩阵按 |λ| 排序的前 k 个特征向量，按 sqrt(|λ|) 缩放；
    近零特征值对应的列置零并发出 RankDeficientWarning。

    Args:
        graph: 网络
        k: 潜在维度，需小于节点数
        mask: 可选的观测掩码，留出的节点对不参与初始化

    Returns:
        LatentState: 确定性的初始值
    """
    n = graph.n
    if not 1 <= k < n:
        raise ConfigError(f'潜在维度 k={k} 必须满足 1 <= k < n={n}')

    adj = np.asarray(graph.adj, dtype=float)
    weights = observation_weights(mask, n)
    alpha = degree_alpha(adj, weights)

    evals, evecs = np.linalg.eigh(_surrogate(adj, weights))
    order = np.argsort(np.abs(evals), kind='stable')[::-1][:k]
    top = evals[order]
    z = evecs[:, order] * np.sqrt(np.abs(top))

    scale = max(1.0, float(np.abs(evals).max()))
    flat = np.abs(top) <= EIGEN_RTOL * scale
    if flat.any():
        z[:, flat] = 0.0
        logger.warning('谱初始化: %d/%d 个方向的特征值接近 0，已置零', int(flat.sum()), k)
        warnings.warn(f'谱初始化只找到 {k - int(flat.sum())} 个非零特征值 (k={k})',
                      RankDeficientWarning, stacklevel=2)

    return LatentState(alpha=alpha, z=center_rows(z))


def fit_single(graph: Graph, cfg: FitConfig, mask: MaskLike = None) -> FitResult:
    """
    单网络拟合

    α、Z 同时做梯度步，随后对 Z 做列中心化投影；cfg.radius 不为 None 时
    Z 的每一行同时限制在半径 radius 的球内

    Args:
        graph: 目标网络
        cfg: 拟合参数
        mask: 可选观测掩码，只有观测到的节点对进入似然和梯度

    Returns:
        FitResult
    """
    adj = np.asarray(graph.adj, dtype=float)
    n = graph.n
    weights = observation_weights(mask, n)
    init = spectral_init(graph, cfg.k, mask)
    z0 = center_and_bound(init.z, cfg.radius)

    def objective(blocks):
        return nll(adj, build_theta(blocks[0], blocks[1]), weights)

    def gradient(blocks):
        resid = theta_residual(adj, build_theta(blocks[0], blocks[1]), weights)
        return [2.0 * resid.sum(axis=1), 2.0 * resid @ blocks[1]]

    def project(blocks, steps):
        return [blocks[0], center_and_bound(blocks[1], cfg.radius)]

    resid0 = theta_residual(adj, build_theta(init.alpha, z0), weights)
    scales = [cfg.step_alpha / n, z_step_scale(cfg.step_z, resid0, z0)]

    solver = GradientSolver(cfg, objective, gradient, project, name='fit_single')
    outcome = solver.run([init.alpha, z0], scales)
    alpha, z = outcome.blocks

    logger.info('单网络拟合完成: n=%d, k=%d, 迭代 %d 次, 收敛=%s',
                n, cfg.k, outcome.iterations, outcome.converged)
    return FitResult(state=LatentState(alpha=alpha, z=z),
                     objective_trace=outcome.objective_trace,
                     iterations=outcome.iterations,
                     converged=outcome.converged)
