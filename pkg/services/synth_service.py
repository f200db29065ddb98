# coding: utf-8
"""
模拟数据生成
目标网络 + 源网络集合，已知真值，用于基准测试与验收测试
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from models.errors import ConfigError
from models.graph import Graph
from models.latent import TransferProblem
from utils.core_math import build_theta, center_rows, sigmoid
from utils.seeds import rng_for

logger = logging.getLogger(__name__)

SIZE_SCENARIOS = ('equal', 'mixed', 'double')
DELTA_CASES = ('zero15', 'five15', 'uniform')

# 命令行中的简写
SCENARIO_ALIASES = {'1': 'equal', '2': 'mixed', '3': 'double'}
CASE_ALIASES = {'i': 'zero15', 'ii': 'five15', 'iii': 'uniform'}

# mixed 场景中规模随机的源网络个数
MIXED_RANDOM_SOURCES = 5


@dataclass(frozen=True)
class ScenarioConfig:
    """模拟场景"""

    n: int = 200
    L: int = 10
    a_size: int = 5
    k: int = 2
    size_scenario: str = 'mixed'
    delta_case: str = 'zero15'
    alpha_t_range: Tuple[float, float] = (-2.625, -0.875)
    alpha_s_range: Tuple[float, float] = (-1.313, -0.438)
    seed: int = 0

    def __post_init__(self):
        scenario = SCENARIO_ALIASES.get(str(self.size_scenario), self.size_scenario)
        case = CASE_ALIASES.get(str(self.delta_case).lower(), self.delta_case)
        if scenario not in SIZE_SCENARIOS:
            raise ConfigError(f'未知的规模场景: {self.size_scenario}')
        if case not in DELTA_CASES:
            raise ConfigError(f'未知的 δ 情形: {self.delta_case}')
        if self.k < 1 or self.n <= self.k:
            raise ConfigError(f'需要 1 <= k < n, 实际 k={self.k}, n={self.n}')
        if self.L < 1 or not 0 <= self.a_size <= self.L:
            raise ConfigError(f'需要 0 <= a_size <= L 且 L >= 1, 实际 a_size={self.a_size}, L={self.L}')
        for name in ('alpha_t_range', 'alpha_s_range'):
            low, high = getattr(self, name)
            if low > high:
                raise ConfigError(f'{name} 上下界顺序错误: ({low}, {high})')
            object.__setattr__(self, name, (float(low), float(high)))
        object.__setattr__(self, 'size_scenario', scenario)
        object.__setattr__(self, 'delta_case', case)

    @classmethod
    def from_config(cls, config_class, **overrides):
        values = {
            'n': config_class.SIM_N,
            'L': config_class.SIM_SOURCES,
            'a_size': config_class.SIM_A_SIZE,
            'k': config_class.FIT_K,
            'size_scenario': config_class.SIM_SCENARIO,
            'delta_case': config_class.SIM_CASE,
            'alpha_t_range': tuple(config_class.ALPHA_T_RANGE),
            'alpha_s_range': tuple(config_class.ALPHA_S_RANGE),
            'seed': config_class.SEED,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def with_seed(self, seed: int) -> 'ScenarioConfig':
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            'n': self.n, 'L': self.L, 'a_size': self.a_size, 'k': self.k,
            'size_scenario': self.size_scenario, 'delta_case': self.delta_case,
            'alpha_t_range': list(self.alpha_t_range),
            'alpha_s_range': list(self.alpha_s_range),
            'seed': self.seed,
        }


@dataclass
class SourceTruth:
    """单个源网络的真值"""

    u0l_star: np.ndarray
    u_l_star: np.ndarray
    alpha_s_star: np.ndarray
    delta_l: float
    informative: bool

    @property
    def z_star(self) -> np.ndarray:
        return np.vstack([self.u0l_star, self.u_l_star])


@dataclass
class GroundTruth:
    """目标网络真值 + 各源网络真值"""

    z_t_star: np.ndarray
    alpha_t_star: np.ndarray
    centers: np.ndarray
    sources: List[SourceTruth] = field(default_factory=list)

    @property
    def informative(self) -> List[bool]:
        return [s.informative for s in self.sources]

    @property
    def informative_indices(self) -> List[int]:
        return [l for l, s in enumerate(self.sources) if s.informative]

    @property
    def theta_t_star(self) -> np.ndarray:
        return build_theta(self.alpha_t_star, self.z_t_star)

    def to_dict(self) -> dict:
        return {
            'z_t_star': self.z_t_star.tolist(),
            'alpha_t_star': self.alpha_t_star.tolist(),
            'centers': self.centers.tolist(),
            'sources': [
                {
                    'delta_l': float(s.delta_l),
                    'informative': bool(s.informative),
                    'alpha_s_star': s.alpha_s_star.tolist(),
                    'u0l_star': s.u0l_star.tolist(),
                    'u_l_star': s.u_l_star.tolist(),
                }
                for s in self.sources
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'GroundTruth':
        z = np.asarray(data['z_t_star'], dtype=float)
        k = z.shape[1]
        return cls(
            z_t_star=z,
            alpha_t_star=np.asarray(data['alpha_t_star'], dtype=float),
            centers=np.asarray(data.get('centers', np.zeros((k, k))), dtype=float),
            sources=[
                SourceTruth(
                    u0l_star=np.asarray(s['u0l_star'], dtype=float).reshape(-1, k),
                    u_l_star=np.asarray(s['u_l_star'], dtype=float).reshape(-1, k),
                    alpha_s_star=np.asarray(s['alpha_s_star'], dtype=float),
                    delta_l=float(s['delta_l']),
                    informative=bool(s['informative']),
                )
                for s in data.get('sources', [])
            ],
        )


def random_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar 分布的 m×m 正交矩阵: 高斯矩阵 QR 分解后修正符号"""
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    return q * np.sign(np.diag(r))


def centered_frame(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """n×k 列正交矩阵，列属于中心化子空间 (J₁V = V)"""
    q, r = np.linalg.qr(center_rows(rng.standard_normal((n, k))))
    return q * np.sign(np.diag(r))


def clustered_positions(count: int, centers: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """节点均匀随机分到 k 个簇，第 v 簇的潜在位置 ~ N(μ_v, I)，再中心化"""
    k = centers.shape[0]
    if count == 0:
        return np.zeros((0, k))
    membership = rng.integers(0, k, size=count)
    return center_rows(centers[membership] + rng.standard_normal((count, k)))


def sample_graph(theta: np.ndarray, rng: np.random.Generator,
                 labels: Optional[List[str]] = None) -> Graph:
    """按 A_ij ~ Bernoulli(σ(θ_ij)) 独立抽取上三角，对称化，对角线为 0"""
    n = theta.shape[0]
    upper = np.triu(rng.random((n, n)) < sigmoid(theta), 1)
    adj = (upper | upper.T).astype(int)
    return Graph.from_adjacency(adj, labels)


def target_labels(n: int) -> List[str]:
    width = len(str(n))
    return [f't{i:0{width}d}' for i in range(n)]


def gen_target(cfg: ScenarioConfig) -> Tuple[Graph, GroundTruth]:
    """
    生成目标网络

    Returns:
        (Graph, GroundTruth)，GroundTruth.sources 为空，由 gen_sources 补全
    """
    rng = rng_for(cfg.seed, 0)
    k = cfg.k
    centers = rng.uniform(-1.0, 1.0, size=(k, k))
    z = clustered_positions(cfg.n, centers, rng)
    alpha = rng.uniform(*cfg.alpha_t_range, size=cfg.n)
    graph = sample_graph(build_theta(alpha, z), rng, target_labels(cfg.n))
    logger.debug('目标网络: n=%d, 密度 %.4f', cfg.n, graph.density)
    return graph, GroundTruth(z_t_star=z, alpha_t_star=alpha, centers=centers)


def source_sizes(cfg: ScenarioConfig, rng: np.random.Generator) -> List[int]:
    n = cfg.n
    if cfg.size_scenario == 'equal':
        return [n] * cfg.L
    if cfg.size_scenario == 'double':
        return [2 * n] * cfg.L
    head = min(MIXED_RANDOM_SOURCES, cfg.L)
    drawn = [int(np.rint(v)) for v in rng.uniform(n, 2 * n, size=head)]
    return drawn + [2 * n] * (cfg.L - head)


def delta_levels(cfg: ScenarioConfig, rng: np.random.Generator) -> List[float]:
    informative = cfg.a_size
    rest = cfg.L - cfg.a_size
    if cfg.delta_case == 'zero15':
        return [0.0] * informative + [15.0] * rest
    if cfg.delta_case == 'five15':
        return [5.0] * informative + [15.0] * rest
    return list(rng.uniform(0.0, 5.0, size=informative)) + list(rng.uniform(10.0, 15.0, size=rest))


def gen_sources(cfg: ScenarioConfig, truth: GroundTruth) -> List[Graph]:
    """
    生成源网络并补全 truth.sources

    U₀l* = V₁DV₂ᵀ + Z^{t*}，D = δ_l I_k；前 a_size 个源网络为可迁移网络
    """
    n, k = cfg.n, cfg.k
    layout_rng = rng_for(cfg.seed, 'layout')
    sizes = source_sizes(cfg, layout_rng)
    deltas = delta_levels(cfg, layout_rng)
    labels_t = target_labels(n)

    graphs = []
    truth.sources = []
    for l, (size, delta) in enumerate(zip(sizes, deltas)):
        rng = rng_for(cfg.seed, 1 + l)
        v1 = centered_frame(n, k, rng)
        v2 = random_orthogonal(k, rng)
        u0l = center_rows(v1 @ (delta * np.eye(k)) @ v2.T) + truth.z_t_star
        u_l = clustered_positions(size - n, truth.centers, rng)
        alpha = rng.uniform(*cfg.alpha_s_range, size=size)

        width = len(str(size))
        labels = labels_t + [f's{l + 1}_{i:0{width}d}' for i in range(size - n)]
        source = SourceTruth(u0l_star=u0l, u_l_star=u_l, alpha_s_star=alpha,
                             delta_l=float(delta), informative=l < cfg.a_size)
        graphs.append(sample_graph(build_theta(alpha, source.z_star), rng, labels))
        truth.sources.append(source)
        logger.debug('源网络 %d: N=%d, δ=%.3f, 密度 %.4f', l + 1, size, delta, graphs[-1].density)
    return graphs


def generate_ensemble(cfg: ScenarioConfig) -> Tuple[TransferProblem, GroundTruth]:
    """生成完整的迁移问题 (源网络前 n 个节点即目标节点)"""
    target, truth = gen_target(cfg)
    sources = gen_sources(cfg, truth)
    return TransferProblem(target=target, sources=tuple(sources)), truth
