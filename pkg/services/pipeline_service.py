# coding: utf-8
"""
方法流水线
one-mode / TLK / TLD / TLE / TLB
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from models.errors import ConfigError
from models.latent import DebiasConfig, DebiasResult, FitConfig, TransferFit, TransferProblem
from services.debias_service import (
    CVConfig,
    default_lambda,
    default_lambda_grid,
    fit_debias,
    select_lambda,
)
from services.detect_service import DetectConfig, DetectionReport, detect_transferable
from services.lsm_service import MaskLike, fit_single
from services.transfer_service import fit_transfer, restrict_to_target
from services.worker_pool import WorkerPool
from utils.core_math import build_theta, sigmoid
from utils.seeds import derive_seed

logger = logging.getLogger(__name__)

METHODS = ('TLK', 'TLD', 'TLE', 'TLB', 'one-mode')
LAMBDA_SELECTIONS = ('fixed', 'cv')


@dataclass(frozen=True)
class PipelineSettings:
    """流水线参数: 各阶段配置 + λ 选择方式"""

    fit: FitConfig = field(default_factory=FitConfig)
    detect: DetectConfig = field(default_factory=DetectConfig)
    lambda_selection: str = 'fixed'
    lambda_value: Optional[float] = None  # None 表示 lambda_scale·n
    lambda_scale: float = 0.3
    lambda_grid: Optional[Tuple[float, ...]] = None
    cv_folds: int = 5

    def __post_init__(self):
        if self.lambda_selection not in LAMBDA_SELECTIONS:
            raise ConfigError(f'未知的 λ 选择方式: {self.lambda_selection}')

    @classmethod
    def from_config(cls, config_class, **overrides) -> 'PipelineSettings':
        """
        Args:
            config_class: config.py 中的配置类
            overrides: k、seed、iota、lambda_value 等命令行覆盖项
        """
        fit_keys = {'k', 'max_iter', 'tol', 'step_alpha', 'step_z', 'backtracking', 'shrink', 'seed'}
        detect_keys = {'replicates', 'sample_fraction', 'iota', 'lambda_policy'}
        fit = FitConfig.from_config(
            config_class, **{key: v for key, v in overrides.items() if key in fit_keys})
        detect = DetectConfig.from_config(
            config_class, seed=fit.seed,
            lambda_value=overrides.get('lambda_value'),
            **{key: v for key, v in overrides.items() if key in detect_keys})
        lambda_value = overrides.get('lambda_value')
        if lambda_value is None:
            lambda_value = config_class.DEBIAS_LAMBDA
        grid = config_class.LAMBDA_GRID
        return cls(
            fit=fit,
            detect=detect,
            lambda_selection=overrides.get('lambda_selection') or config_class.LAMBDA_SELECTION,
            lambda_value=lambda_value,
            lambda_scale=config_class.LAMBDA_SCALE,
            lambda_grid=tuple(grid) if grid is not None else None,
            cv_folds=config_class.CV_FOLDS,
        )

    def debias_config(self, lam: float) -> DebiasConfig:
        return DebiasConfig.from_fit(self.fit, lam)


@dataclass
class MethodResult:
    """单个方法在目标网络上的估计"""

    method: str
    alpha_t: np.ndarray
    z_t: np.ndarray
    selected: Optional[Tuple[int, ...]] = None
    detection: Optional[DetectionReport] = None
    lam: Optional[float] = None

    def theta(self) -> np.ndarray:
        return build_theta(self.alpha_t, self.z_t)

    def probabilities(self) -> np.ndarray:
        return sigmoid(self.theta())


def choose_lambda(problem: TransferProblem, u0: np.ndarray, settings: PipelineSettings,
                  mask: MaskLike = None, pool: Optional[WorkerPool] = None) -> float:
    """按 settings 取 λ: 固定值或在网格上交叉验证"""
    n = problem.n
    if settings.lambda_selection == 'fixed':
        if settings.lambda_value is not None:
            return float(settings.lambda_value)
        return default_lambda(n, settings.lambda_scale)
    grid = settings.lambda_grid or tuple(default_lambda_grid(n))
    cv = CVConfig(folds=settings.cv_folds, seed=derive_seed(settings.fit.seed, 'lambda'))
    return select_lambda(problem.target, u0, grid, cv, cfg=settings.debias_config(1.0),
                         mask=mask, pool=pool)


def two_stage(problem: TransferProblem, settings: PipelineSettings, mask: MaskLike = None,
              pool: Optional[WorkerPool] = None) -> Tuple[DebiasResult, TransferFit]:
    """迁移阶段 + 去偏阶段，problem 中的源网络全部视为可迁移"""
    transfer = fit_transfer(problem, settings.fit)
    lam = choose_lambda(problem, transfer.u0, settings, mask, pool)
    result = fit_debias(problem.target, transfer.u0, settings.debias_config(lam), mask)
    return result, transfer


def _one_mode(problem, settings, mask, method='one-mode') -> MethodResult:
    fit = fit_single(problem.target, settings.fit, mask)
    return MethodResult(method=method, alpha_t=fit.state.alpha, z_t=fit.state.z, selected=())


def _transfer_on(problem, indices, settings, mask, pool, method) -> MethodResult:
    result, _ = two_stage(problem.subset(indices), settings, mask, pool)
    return MethodResult(method=method, alpha_t=result.alpha_t, z_t=result.z_t,
                        selected=tuple(indices), lam=result.lam)


def _detect_then_transfer(problem, settings, mask, pool, method) -> MethodResult:
    report = detect_transferable(problem, settings.detect, settings.fit,
                                 settings.debias_config(1.0), observed=mask, pool=pool)
    selected = sorted(report.selected)
    if not selected:
        logger.info('%s: 没有检测到可迁移源网络，退回 one-mode', method)
        result = _one_mode(problem, settings, mask, method)
    else:
        result = _transfer_on(problem, selected, settings, mask, pool, method)
    result.detection = report
    return result


def run_method(method: str, problem: TransferProblem, settings: PipelineSettings,
               informative: Optional[Sequence[int]] = None, mask: MaskLike = None,
               pool: Optional[WorkerPool] = None) -> MethodResult:
    """
    执行一个估计方法

    Args:
        method: METHODS 之一
        problem: 迁移问题
        settings: 流水线参数
        informative: TLK 使用的已知可迁移源网络下标
        mask: 目标网络观测掩码 (留出实验)
        pool: 并行池

    Returns:
        MethodResult
    """
    if method not in METHODS:
        raise ConfigError(f'未知的方法: {method} (可选: {", ".join(METHODS)})')

    if method == 'one-mode':
        return _one_mode(problem, settings, mask)
    if method == 'TLK':
        if informative is None:
            raise ConfigError('TLK 需要已知的可迁移源网络集合')
        return _transfer_on(problem, sorted(informative), settings, mask, pool, method)
    if method == 'TLB':
        return _transfer_on(problem, list(range(problem.size)), settings, mask, pool, method)
    if method == 'TLE':
        return _detect_then_transfer(restrict_to_target(problem), settings, mask, pool, method)
    return _detect_then_transfer(problem, settings, mask, pool, method)
