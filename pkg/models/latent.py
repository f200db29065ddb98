# coding: utf-8
"""
潜在空间模型参数与拟合结果
"""
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models.errors import (
    AmbiguousAlignmentError,
    ConfigError,
    DimensionMismatchError,
    EmptyTransferSetError,
    LatentSpaceError,
)
from models.graph import Graph

# Θ = α1ᵀ + 1αᵀ + ZZᵀ, n×n 对称
LogOddsMatrix = np.ndarray


@dataclass(frozen=True)
class LatentState:
    """单个网络的 (α, Z)"""

    alpha: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if alpha.ndim != 1 or z.ndim != 2 or z.shape[0] != alpha.shape[0]:
            raise DimensionMismatchError(
                f'alpha 形状 {alpha.shape} 与 z 形状 {z.shape} 不匹配')
        if z.shape[1] < 1:
            raise LatentSpaceError('潜在维度 k 至少为 1')
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 'z', z)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def k(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class FitConfig:
    """投影梯度下降参数"""

    k: int = 2
    max_iter: int = 2000
    tol: float = 1e-6
    step_alpha: float = 1.0
    step_z: float = 1.0
    backtracking: bool = True
    shrink: float = 0.5
    seed: int = 0
    radius: Optional[float] = None  # Z 的行范数上界

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f'k 必须 >= 1, 实际为 {self.k}')
        if self.max_iter < 0:
            raise ConfigError(f'max_iter 不能为负, 实际为 {self.max_iter}')
        if self.tol <= 0:
            raise ConfigError(f'tol 必须为正, 实际为 {self.tol}')
        if self.step_alpha <= 0 or self.step_z <= 0:
            raise ConfigError('步长必须为正')
        if not 0 < self.shrink < 1:
            raise ConfigError(f'shrink 必须在 (0, 1) 内, 实际为 {self.shrink}')
        if self.radius is not None and self.radius <= 0:
            raise ConfigError(f'radius 必须为正, 实际为 {self.radius}')

    @classmethod
    def from_config(cls, config_class, **overrides):
        """从 config.py 中的配置类构造"""
        values = {
            'k': config_class.FIT_K,
            'max_iter': config_class.FIT_MAX_ITER,
            'tol': config_class.FIT_TOL,
            'step_alpha': config_class.STEP_ALPHA,
            'step_z': config_class.STEP_Z,
            'backtracking': config_class.BACKTRACKING,
            'shrink': config_class.SHRINK,
            'seed': config_class.SEED,
            'radius': config_class.FIT_RADIUS,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class DebiasConfig(FitConfig):
    """去偏阶段参数: FitConfig + 核范数惩罚系数 lam"""

    lam: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.lam < 0:
            raise ConfigError(f'lambda 不能为负, 实际为 {self.lam}')

    @classmethod
    def from_config(cls, config_class, **overrides):
        if getattr(config_class, 'DEBIAS_LAMBDA', None) is not None:
            overrides.setdefault('lam', config_class.DEBIAS_LAMBDA)
        return super().from_config(config_class, **overrides)

    @classmethod
    def from_fit(cls, fit_cfg: FitConfig, lam: float) -> 'DebiasConfig':
        values = fit_cfg.to_dict()
        values['lam'] = lam
        return cls(**values)

    def with_lambda(self, lam: float) -> 'DebiasConfig':
        values = self.to_dict()
        values['lam'] = lam
        return DebiasConfig(**values)


@dataclass
class FitResult:
    """单网络拟合结果"""

    state: LatentState
    objective_trace: List[float]
    iterations: int
    converged: bool


@dataclass(frozen=True)
class TransferProblem:
    """
    迁移问题: 目标网络 + 源网络 + 对齐关系

    alignments[l][i] 是目标节点 i 在第 l 个源网络中的下标;
    为 None 时默认源网络前 n 个节点按顺序对应目标节点
    """

    target: Graph
    sources: Tuple[Graph, ...]
    alignments: Optional[Tuple[Tuple[int, ...], ...]] = None
    names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        sources = tuple(self.sources)
        object.__setattr__(self, 'sources', sources)
        n = self.target.n

        if self.alignments is None:
            alignments = tuple(tuple(range(n)) for _ in sources)
        else:
            alignments = tuple(tuple(int(i) for i in a) for a in self.alignments)
        if len(alignments) != len(sources):
            raise DimensionMismatchError('对齐关系数量与源网络数量不一致')

        for l, (source, alignment) in enumerate(zip(sources, alignments)):
            if source.n < n:
                raise DimensionMismatchError(
                    f'源网络 {l} 只有 {source.n} 个节点, 少于目标网络的 {n} 个')
            if len(alignment) != n:
                raise DimensionMismatchError(f'源网络 {l} 的对齐关系未覆盖全部目标节点')
            if min(alignment) < 0 or max(alignment) >= source.n:
                raise DimensionMismatchError(f'源网络 {l} 的对齐下标越界')
            if len(set(alignment)) != n:
                raise AmbiguousAlignmentError(f'源网络 {l} 的对齐关系不是单射')
        object.__setattr__(self, 'alignments', alignments)

        if self.names is None:
            width = len(str(len(sources)))
            names = tuple(f'source_{l + 1:0{width}d}' for l in range(len(sources)))
        else:
            names = tuple(str(name) for name in self.names)
        if len(names) != len(sources) or len(set(names)) != len(names):
            raise LatentSpaceError('源网络名称必须唯一且与源网络一一对应')
        object.__setattr__(self, 'names', names)

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def size(self) -> int:
        return len(self.sources)

    @cached_property
    def ordered_sources(self) -> Tuple[Graph, ...]:
        """
        重排后的源网络: 前 n 个节点按目标顺序，其余节点按标签字典序
        """
        ordered = []
        for source, alignment in zip(self.sources, self.alignments):
            aligned = set(alignment)
            rest = sorted((i for i in range(source.n) if i not in aligned),
                          key=lambda i: source.labels[i])
            ordered.append(source.subgraph(list(alignment) + rest))
        return tuple(ordered)

    def subset(self, indices: Sequence[int]) -> 'TransferProblem':
        """只保留部分源网络"""
        indices = list(indices)
        if not indices:
            raise EmptyTransferSetError('可迁移源网络集合为空')
        return TransferProblem(
            target=self.target,
            sources=tuple(self.sources[l] for l in indices),
            alignments=tuple(self.alignments[l] for l in indices),
            names=tuple(self.names[l] for l in indices),
        )


@dataclass
class SourceParams:
    """单个源网络的 (α^{s_l}, U_l)"""

    alpha: np.ndarray
    u: np.ndarray


@dataclass
class TransferFit:
    """迁移阶段结果"""

    u0: np.ndarray
    per_source: List[SourceParams]
    objective_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


@dataclass
class DebiasResult:
    """去偏阶段结果, z_t = u0 + delta"""

    alpha_t: np.ndarray
    delta: np.ndarray
    z_t: np.ndarray
    objective_trace: List[float]
    iterations: int
    converged: bool
    lam: float = 0.0

    @property
    def state(self) -> LatentState:
        return LatentState(alpha=self.alpha_t, z=self.z_t)
