# coding: utf-8
"""
评估指标
相对误差、检测 TPR/FPR、Brier 分数、留出预测实验
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from models.errors import ConfigError, DimensionMismatchError, ZeroDenominatorError
from models.graph import Graph, as_pairs, pairs_to_mask, upper_pairs
from models.latent import TransferProblem
from services.pipeline_service import PipelineSettings, run_method
from services.synth_service import GroundTruth
from services.worker_pool import WorkerPool, ensure_pool
from utils.core_math import build_theta, procrustes_distance
from utils.seeds import derive_seed

logger = logging.getLogger(__name__)


@dataclass
class MetricsReport:
    """单次估计的指标"""

    delta_z: float
    delta_alpha: float
    delta_theta: float
    procrustes_z: float
    tpr: Optional[float] = None
    fpr: Optional[float] = None

    def as_rows(self) -> dict:
        rows = {
            'delta_z': self.delta_z,
            'delta_alpha': self.delta_alpha,
            'delta_theta': self.delta_theta,
            'procrustes_z': self.procrustes_z,
        }
        if self.tpr is not None:
            rows['tpr'] = self.tpr
        if self.fpr is not None:
            rows['fpr'] = self.fpr
        return rows


def _relative(estimate: np.ndarray, truth: np.ndarray, name: str) -> float:
    denominator = float(np.sum(truth ** 2))
    if denominator == 0:
        raise ZeroDenominatorError(f'{name} 的真值范数为 0')
    return float(np.sum((estimate - truth) ** 2)) / denominator


def relative_errors(truth: GroundTruth, alpha_t: np.ndarray,
                    z_t: np.ndarray) -> Tuple[float, float, float]:
    """
    (Δ_Z, Δ_α, Δ_Θ)

    Δ_Z 比较 Gram 矩阵 ZZᵀ，与 Z 的旋转无关
    """
    alpha_t = np.asarray(alpha_t, dtype=float)
    z_t = np.asarray(z_t, dtype=float).reshape(alpha_t.shape[0], -1)
    if z_t.shape != truth.z_t_star.shape or alpha_t.shape != truth.alpha_t_star.shape:
        raise DimensionMismatchError(
            f'估计形状 {z_t.shape} 与真值形状 {truth.z_t_star.shape} 不一致')
    delta_z = _relative(z_t @ z_t.T, truth.z_t_star @ truth.z_t_star.T, 'Z')
    delta_alpha = _relative(alpha_t, truth.alpha_t_star, 'alpha')
    delta_theta = _relative(build_theta(alpha_t, z_t), truth.theta_t_star, 'Theta')
    return delta_z, delta_alpha, delta_theta


def procrustes_error(truth: GroundTruth, z_t: np.ndarray) -> float:
    """min_O ‖Ẑ − Z*O‖_F"""
    dist, _ = procrustes_distance(np.asarray(z_t, dtype=float), truth.z_t_star)
    return dist


def detection_rates(informative: Sequence[bool],
                    selected: Iterable[int]) -> Tuple[Optional[float], Optional[float]]:
    """
    Args:
        informative: 每个源网络是否可迁移
        selected: 被选中的源网络下标

    Returns:
        (tpr, fpr)；没有可迁移 (不可迁移) 源网络时对应项为 None
    """
    flags = np.asarray(informative, dtype=bool)
    if flags.size == 0:
        raise ConfigError('至少需要一个源网络')
    chosen = np.zeros(flags.size, dtype=bool)
    chosen[list(selected)] = True
    positives = int(flags.sum())
    negatives = int((~flags).sum())
    tpr = float((chosen & flags).sum()) / positives if positives else None
    fpr = float((chosen & ~flags).sum()) / negatives if negatives else None
    return tpr, fpr


def evaluate(truth: GroundTruth, alpha_t: np.ndarray, z_t: np.ndarray,
             selected: Optional[Iterable[int]] = None) -> MetricsReport:
    """汇总一次估计的全部指标；selected 不为 None 时附带检测指标"""
    delta_z, delta_alpha, delta_theta = relative_errors(truth, alpha_t, z_t)
    tpr = fpr = None
    if selected is not None and truth.sources:
        tpr, fpr = detection_rates(truth.informative, selected)
    return MetricsReport(delta_z=delta_z, delta_alpha=delta_alpha, delta_theta=delta_theta,
                         procrustes_z=procrustes_error(truth, z_t), tpr=tpr, fpr=fpr)


def brier(graph: Graph, p_hat: np.ndarray, heldout) -> float:
    """留出节点对上 (p̂_ij − A_ij)² 的平均"""
    rows, cols = as_pairs(heldout, graph.n)
    p = np.asarray(p_hat, dtype=float)
    if p.shape != graph.adj.shape:
        raise DimensionMismatchError(f'概率矩阵形状 {p.shape} 与图 {graph.adj.shape} 不一致')
    if np.any((p < 0) | (p > 1)):
        raise ConfigError('概率必须在 [0, 1] 内')
    return float(np.mean((p[rows, cols] - graph.adj[rows, cols]) ** 2))


def summarize(values: Sequence[float]) -> Tuple[float, float]:
    """(均值, 样本标准差)；只有一个值时标准差为 nan"""
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return float('nan'), float('nan')
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else float('nan')
    return float(arr.mean()), sd


def holdout_mask(n: int, missing_ratio: float, seed: int) -> Tuple[np.ndarray, tuple]:
    """
    随机留出 missing_ratio 比例的节点对 (至少一个)

    Returns:
        (observed, heldout)：observed 为对称布尔掩码 (对角线 False)，heldout 为 (rows, cols)
    """
    rows, cols = upper_pairs(n)
    size = max(1, int(round(missing_ratio * rows.size)))
    chosen = np.random.default_rng(seed).choice(rows.size, size=size, replace=False)
    heldout = (rows[chosen], cols[chosen])
    observed = ~pairs_to_mask(n, heldout)
    np.fill_diagonal(observed, False)
    return observed, heldout


def _holdout_cell(task):
    problem, method, settings, informative, missing_ratio, seed, repeat = task
    observed, heldout = holdout_mask(problem.n, missing_ratio, derive_seed(seed, 'holdout', repeat))
    result = run_method(method, problem, settings, informative=informative, mask=observed)
    return brier(problem.target, result.probabilities(), heldout)


def holdout_experiment(problem: TransferProblem, method: str, missing_ratio: float,
                       repeats: int, settings: Optional[PipelineSettings] = None,
                       seed: int = 0, informative: Optional[Sequence[int]] = None,
                       pool: Optional[WorkerPool] = None) -> pd.DataFrame:
    """
    留出预测实验

    每次重复随机留出 missing_ratio 比例的目标网络节点对，在其余节点对上拟合，
    用留出节点对的 Brier 分数评估

    Returns:
        DataFrame[method, missing_ratio, repeat, brier]，均值/标准差见 summarize
    """
    if not 0 < missing_ratio < 1:
        raise ConfigError(f'missing_ratio 必须在 (0, 1) 内, 实际为 {missing_ratio}')
    if repeats < 1:
        raise ConfigError(f'repeats 至少为 1, 实际为 {repeats}')
    settings = settings or PipelineSettings()

    tasks = [(problem, method, settings, informative, missing_ratio, seed, r)
             for r in range(repeats)]
    scores = ensure_pool(pool).map(_holdout_cell, tasks)
    table = pd.DataFrame({
        'method': method,
        'missing_ratio': missing_ratio,
        'repeat': np.arange(1, repeats + 1),
        'brier': scores,
    })
    mean, sd = summarize(scores)
    logger.info('留出实验 %s (p=%.2f): Brier %.4f ± %.4f', method, missing_ratio, mean, sd)
    return table
