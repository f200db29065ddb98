# coding: utf-8
"""
迁移阶段
在可迁移源网络上联合估计共享潜在块 u0 与各源网络的 (α, U_l)
"""
import logging
import warnings
from typing import List, Tuple

import numpy as np

from models.errors import DimensionMismatchError, EmptyTransferSetError, RankDeficientWarning
from models.latent import FitConfig, SourceParams, TransferFit, TransferProblem
from services.lsm_service import spectral_init
from services.optim import GradientSolver, operator_norm
from utils.core_math import build_theta, center_rows, nll, procrustes_distance, theta_residual

logger = logging.getLogger(__name__)


def _stacked(u0: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Z̊ = [u0; u_l]"""
    return np.vstack([u0, np.asarray(u, dtype=float).reshape(-1, u0.shape[1])])


def _check_shapes(problem: TransferProblem, fit: TransferFit):
    n = problem.n
    if fit.u0.ndim != 2 or fit.u0.shape[0] != n:
        raise DimensionMismatchError(f'u0 形状 {fit.u0.shape} 与目标网络 n={n} 不一致')
    if len(fit.per_source) != problem.size:
        raise DimensionMismatchError(
            f'源网络参数数量 {len(fit.per_source)} 与源网络数量 {problem.size} 不一致')
    for l, (source, params) in enumerate(zip(problem.ordered_sources, fit.per_source)):
        if params.alpha.shape != (source.n,):
            raise DimensionMismatchError(f'源网络 {l} 的 alpha 长度应为 {source.n}')
        if np.asarray(params.u).reshape(-1, fit.u0.shape[1]).shape[0] != source.n - n:
            raise DimensionMismatchError(f'源网络 {l} 的 U_l 行数应为 {source.n - n}')


def pooled_nll(problem: TransferProblem, fit: TransferFit) -> float:
    """
    合并负对数似然 Σ_l nll(source_l, θ^{s_l})

    θ^{s_l} 由 α^{s_l} 与堆叠矩阵 [u0; u_l] 构造
    """
    _check_shapes(problem, fit)
    total = 0.0
    for source, params in zip(problem.ordered_sources, fit.per_source):
        z = _stacked(fit.u0, params.u)
        total += nll(source.adj, build_theta(params.alpha, z))
    return total


def pooled_gradient(problem: TransferProblem, u0: np.ndarray,
                    per_source: List[SourceParams]) -> Tuple[np.ndarray, List[SourceParams]]:
    """
    合并似然的梯度

    Returns:
        (grad_u0, [SourceParams(grad_alpha_l, grad_u_l)])；grad_u0 按源网络顺序累加
    """
    n = problem.n
    grad_u0 = np.zeros_like(u0)
    grads = []
    for source, params in zip(problem.ordered_sources, per_source):
        z = _stacked(u0, params.u)
        resid = theta_residual(source.adj, build_theta(params.alpha, z))
        grad_z = 2.0 * resid @ z
        grad_u0 += grad_z[:n]
        grads.append(SourceParams(alpha=2.0 * resid.sum(axis=1), u=grad_z[n:]))
    return grad_u0, grads


def initialize_transfer(problem: TransferProblem, k: int) -> TransferFit:
    """
    初始值: 各源网络独立谱初始化，前 n 行对齐到第一个源网络后取平均

    每个源网络的整块 Z 用同一个旋转，u_l 与 u0 保持一致的坐标系
    """
    n = problem.n
    reference = None
    blocks = []
    per_source = []
    for source in problem.ordered_sources:
        state = spectral_init(source, k)
        z = state.z
        if reference is None:
            reference = z[:n]
        else:
            _, rotation = procrustes_distance(reference, z[:n])
            z = z @ rotation
        blocks.append(z[:n])
        per_source.append(SourceParams(alpha=state.alpha, u=center_rows(z[n:])))
    u0 = center_rows(np.mean(blocks, axis=0))
    return TransferFit(u0=u0, per_source=per_source)


def fit_transfer(problem: TransferProblem, cfg: FitConfig) -> TransferFit:
    """
    迁移阶段拟合

    对 u0、各 α^{s_l}、各 U_l 同时做梯度步；u0 与 U_l 分别按各自的节点数中心化

    Args:
        problem: 只包含可迁移源网络的迁移问题
        cfg: 拟合参数

    Returns:
        TransferFit
    """
    if problem.size == 0:
        raise EmptyTransferSetError('可迁移源网络集合为空')

    n = problem.n
    k = cfg.k
    sources = problem.ordered_sources
    init = initialize_transfer(problem, k)

    def unpack(blocks):
        u0 = blocks[0]
        per_source = [SourceParams(alpha=blocks[1 + 2 * l], u=blocks[2 + 2 * l])
                      for l in range(len(sources))]
        return u0, per_source

    def objective(blocks):
        u0, per_source = unpack(blocks)
        return pooled_nll(problem, TransferFit(u0=u0, per_source=per_source))

    def gradient(blocks):
        u0, per_source = unpack(blocks)
        grad_u0, grads = pooled_gradient(problem, u0, per_source)
        flat = [grad_u0]
        for g in grads:
            flat.extend([g.alpha, g.u])
        return flat

    def project(blocks, steps):
        return [center_rows(b) if i % 2 == 0 else b for i, b in enumerate(blocks)]

    # 各块的基础步长
    scales = [0.0]
    curvatures = []
    for source, params in zip(sources, init.per_source):
        z = _stacked(init.u0, params.u)
        resid = theta_residual(source.adj, build_theta(params.alpha, z))
        curvature = max(2.0 * operator_norm(resid) + operator_norm(z) ** 2, 1e-12)
        curvatures.append(curvature)
        scales.extend([cfg.step_alpha / source.n, cfg.step_z / curvature])
    scales[0] = cfg.step_z / (len(sources) * float(np.mean(curvatures)))

    blocks = [init.u0]
    for params in init.per_source:
        blocks.extend([params.alpha, params.u])

    solver = GradientSolver(cfg, objective, gradient, project, name='fit_transfer')
    outcome = solver.run(blocks, scales)
    u0, per_source = unpack(outcome.blocks)

    if np.linalg.matrix_rank(u0) < k:
        logger.warning('迁移阶段: u0 列不满秩 (k=%d)', k)
        warnings.warn('u0 列不满秩', RankDeficientWarning, stacklevel=2)

    logger.info('迁移阶段完成: %d 个源网络, n=%d, 迭代 %d 次, 收敛=%s',
                len(sources), n, outcome.iterations, outcome.converged)
    return TransferFit(u0=u0, per_source=per_source,
                       objective_trace=outcome.objective_trace,
                       iterations=outcome.iterations,
                       converged=outcome.converged)


def restrict_to_target(problem: TransferProblem) -> TransferProblem:
    """源网络只保留与目标网络对齐的节点 (n_l = 0)"""
    return TransferProblem(
        target=problem.target,
        sources=tuple(source.subgraph(alignment)
                      for source, alignment in zip(problem.sources, problem.alignments)),
        names=problem.names,
    )
