# coding: utf-8
"""
数值核心
链接函数、似然、梯度、中心化投影、核范数近端算子、正交 Procrustes 对齐

所有函数都是无副作用的纯函数，可以并发调用
"""
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import orthogonal_procrustes
from scipy.special import expit

from models.errors import ConfigError, DimensionMismatchError
from models.graph import Graph
from models.latent import LatentState, LogOddsMatrix

ArrayLike = Union[np.ndarray, float]


def sigmoid(x: ArrayLike) -> ArrayLike:
    """σ(x) = 1/(1+exp(−x))，按符号分支计算，不会溢出"""
    return expit(x)


def softplus(x: ArrayLike) -> ArrayLike:
    """log(1+exp(x))，等于 −log(1−σ(x))"""
    return np.logaddexp(0.0, x)


def adjacency_of(graph) -> np.ndarray:
    """
    取邻接矩阵

    Args:
        graph: Graph 或者数组(允许取值在 [0,1] 的概率矩阵，用于梯度检验)
    """
    if isinstance(graph, Graph):
        return graph.adj
    return np.asarray(graph, dtype=float)


def _weights_like(weights: Optional[np.ndarray], shape) -> np.ndarray:
    if weights is None:
        return np.ones(shape)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != shape:
        raise DimensionMismatchError(f'权重形状 {weights.shape} 与 {shape} 不一致')
    return weights


def build_theta(alpha: np.ndarray, z: np.ndarray) -> LogOddsMatrix:
    """Θ = α1ᵀ + 1αᵀ + ZZᵀ"""
    return alpha[:, None] + alpha[None, :] + z @ z.T


def log_odds(state: LatentState) -> LogOddsMatrix:
    """由 (α, Z) 构造对数几率矩阵，包括对角线"""
    return build_theta(state.alpha, state.z)


def nll(graph, theta: LogOddsMatrix, weights: Optional[np.ndarray] = None) -> float:
    """
    负对数似然 −Σ_{i,j} {A_ij θ_ij + log(1 − σ(θ_ij))}

    求和遍历全部 i, j (含对角线)。weights 为 0/1 观测掩码时只累加观测到的节点对。

    Args:
        graph: Graph 或邻接数组
        theta: n×n 对数几率矩阵
        weights: 可选的 n×n 权重

    Returns:
        float: 目标函数值
    """
    adj = adjacency_of(graph)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != adj.shape:
        raise DimensionMismatchError(f'图的维度 {adj.shape} 与 theta 维度 {theta.shape} 不一致')
    w = _weights_like(weights, adj.shape)
    return float(np.sum(w * (softplus(theta) - adj * theta)))


def theta_residual(adj: np.ndarray, theta: LogOddsMatrix,
                   weights: Optional[np.ndarray] = None) -> np.ndarray:
    """∂nll/∂θ = W ∘ (σ(θ) − A)"""
    return _weights_like(weights, adj.shape) * (sigmoid(theta) - adj)


def nll_gradient(graph, state: LatentState,
                 weights: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    未投影的梯度

    Returns:
        (grad_alpha, grad_z): grad_alpha = 2 G 1, grad_z = 2 G Z, 其中 G = σ(θ) − A
    """
    adj = adjacency_of(graph)
    if adj.shape != (state.n, state.n):
        raise DimensionMismatchError(f'图的维度 {adj.shape} 与状态维度 n={state.n} 不一致')
    resid = theta_residual(adj, log_odds(state), weights)
    return 2.0 * resid.sum(axis=1), 2.0 * resid @ state.z


def center_rows(m: np.ndarray) -> np.ndarray:
    """J m，J = I − (1/n)11ᵀ；每列减去列均值"""
    m = np.asarray(m, dtype=float)
    if m.shape[0] == 0:
        return m.copy()
    return m - m.mean(axis=0, keepdims=True)


def center_and_bound(m: np.ndarray, radius: Optional[float] = None) -> np.ndarray:
    """
    行范数截断到 radius 后列中心化

    中心化后仍有行越界时整体等比缩放，结果同时满足两个约束，且对可行点是恒等映射
    """
    m = np.asarray(m, dtype=float)
    if radius is None or m.shape[0] == 0:
        return center_rows(m)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    m = center_rows(m * np.minimum(1.0, radius / np.maximum(norms, 1e-300)))
    peak = float(np.linalg.norm(m, axis=1).max())
    if peak > radius:
        m = m * (radius / peak)
    return m


def nuclear_norm(m: np.ndarray) -> float:
    """奇异值之和"""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def prox_nuclear(m: np.ndarray, tau: float) -> np.ndarray:
    """
    核范数近端算子 (奇异值软阈值)

    argmin_X (1/2)‖X − m‖_F² + τ‖X‖_*

    Args:
        m: 输入矩阵
        tau: 阈值 τ >= 0

    Returns:
        U·max(Σ − τ, 0)·Vᵀ
    """
    if tau < 0:
        raise ConfigError(f'tau 不能为负, 实际为 {tau}')
    m = np.asarray(m, dtype=float)
    if tau == 0 or m.size == 0:
        return m.copy()
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return (u * np.maximum(s - tau, 0.0)) @ vt


def procrustes_distance(a: np.ndarray, b: np.ndarray,
                        norm: str = 'frobenius') -> Tuple[float, np.ndarray]:
    """
    min_O ‖a − bO‖，O 为 k×k 正交矩阵

    旋转取 Frobenius 意义下的最优解 (由 bᵀa 的 SVD 给出)；
    norm='nuclear' 时用同一个旋转计算核范数距离。

    Returns:
        (dist, o)
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionMismatchError(f'形状不一致: {a.shape} vs {b.shape}')
    if norm not in ('frobenius', 'nuclear'):
        raise ConfigError(f'不支持的范数: {norm}')

    o, _ = orthogonal_procrustes(b, a)
    resid = a - b @ o
    if norm == 'frobenius':
        return float(np.linalg.norm(resid, 'fro')), o
    return nuclear_norm(resid), o


def heldout_nll(graph, theta: LogOddsMatrix, pairs) -> float:
    """
    留出节点对上的负对数似然，每个无序对只计一次

    Args:
        graph: Graph 或邻接数组
        theta: n×n 对数几率矩阵
        pairs: (rows, cols)
    """
    adj = adjacency_of(graph)
    rows, cols = pairs
    t = np.asarray(theta, dtype=float)[rows, cols]
    return float(np.sum(softplus(t) - adj[rows, cols] * t))
