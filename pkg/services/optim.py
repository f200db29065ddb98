# coding: utf-8
"""
投影/近端梯度下降驱动
单网络拟合、迁移阶段、去偏阶段共用同一套回溯步长逻辑
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from models.errors import NonFiniteError
from models.latent import FitConfig

logger = logging.getLogger(__name__)

# 充分下降常数
ARMIJO = 1e-4
# 步长倍率低于该值视为无法继续下降
MIN_MULTIPLIER = 1e-14

Blocks = List[np.ndarray]


@dataclass
class SolverOutcome:
    """求解结果"""

    blocks: Blocks
    objective_trace: List[float]
    iterations: int
    converged: bool


def operator_norm(m: np.ndarray) -> float:
    """谱范数 (最大奇异值)"""
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def z_step_scale(step_z: float, resid: np.ndarray, z: np.ndarray) -> float:
    """
    潜在位置块的基础步长

    step_z / (2‖σ(θ)−A‖_op + ‖Z‖²_op)；第二项是双线性项 ZZᵀ 的曲率
    """
    curvature = 2.0 * operator_norm(resid) + operator_norm(z) ** 2
    return step_z / max(curvature, 1e-12)


class GradientSolver:
    """
    分块梯度下降 + 回溯

    每次迭代对所有块同时走一步: x_i ← project(x_i − t·s_i·g_i)，
    s_i 为块的基础步长，t 为共享倍率。开启回溯时 t 按 shrink 缩小直到
    目标函数充分下降；一次成功后 t 放大 1/shrink。t 低于 MIN_MULTIPLIER
    时停止迭代，结果标记为未收敛。
    """

    def __init__(self, cfg: FitConfig,
                 objective: Callable[[Blocks], float],
                 gradient: Callable[[Blocks], Blocks],
                 project: Callable[[Blocks, Sequence[float]], Blocks],
                 name: str = 'pgd'):
        """
        Args:
            cfg: 迭代次数、容差、回溯参数
            objective: 完整目标函数(含惩罚项)
            gradient: 光滑部分的梯度
            project: 投影/近端映射，第二个参数为各块实际步长
            name: 日志中使用的名称
        """
        self.cfg = cfg
        self.objective = objective
        self.gradient = gradient
        self.project = project
        self.name = name

    def run(self, blocks: Blocks, scales: Sequence[float]) -> SolverOutcome:
        cfg = self.cfg
        x = [np.array(b, dtype=float) for b in blocks]
        f = self.objective(x)
        if not np.isfinite(f):
            raise NonFiniteError(f'{self.name}: 初始目标函数不是有限值')

        trace = [f]
        multiplier = 1.0
        converged = False
        iterations = 0

        for iteration in range(1, cfg.max_iter + 1):
            grads = self.gradient(x)
            backtracked = False
            stalled = False

            while True:
                steps = [multiplier * s for s in scales]
                candidate = self.project(
                    [xi - si * gi for xi, si, gi in zip(x, steps, grads)], steps)
                f_new = self.objective(candidate)

                if not cfg.backtracking:
                    if not np.isfinite(f_new):
                        raise NonFiniteError(
                            f'{self.name}: 第 {iteration} 次迭代目标函数发散，请减小步长')
                    break

                if np.isfinite(f_new):
                    decrease = sum(float(np.sum((ci - xi) ** 2)) / si
                                   for ci, xi, si in zip(candidate, x, steps))
                    if f_new <= f - ARMIJO * decrease:
                        break

                multiplier *= cfg.shrink
                backtracked = True
                if multiplier < MIN_MULTIPLIER:
                    stalled = True
                    break

            if stalled:
                logger.warning('%s: 第 %d 次迭代回溯到步长倍率 %.1e 仍无法充分下降，未收敛',
                               self.name, iteration, multiplier)
                break

            f_prev = f
            x, f = candidate, f_new
            trace.append(f)
            iterations = iteration

            if cfg.backtracking and not backtracked:
                multiplier /= cfg.shrink

            if abs(f_prev - f) < cfg.tol * abs(f_prev):
                converged = True
                break

        logger.debug('%s: %d 次迭代, 目标函数 %.6f, 收敛=%s', self.name, iterations, f, converged)
        return SolverOutcome(blocks=x, objective_trace=trace, iterations=iterations,
                             converged=converged)
