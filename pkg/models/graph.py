# coding: utf-8
"""
网络数据模型
Graph: 对称二值邻接矩阵 + 节点标签
MaskedGraph: Graph + 节点对观测掩码
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from models.errors import DimensionMismatchError, EmptyHoldoutError, LatentSpaceError

# 节点对集合: (行下标, 列下标)，每个无序对只出现一次且 i < j
PairSet = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class Graph:
    """无向无自环网络"""

    adj: np.ndarray
    labels: Tuple[str, ...]

    def __post_init__(self):
        adj = np.asarray(self.adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise DimensionMismatchError(f'邻接矩阵必须是方阵, 实际形状 {adj.shape}')
        n = adj.shape[0]
        if n < 2:
            raise LatentSpaceError(f'节点数至少为 2, 实际为 {n}')
        if not np.isin(adj, (0, 1)).all():
            raise LatentSpaceError('邻接矩阵只能包含 0/1')
        if not np.array_equal(adj, adj.T):
            raise LatentSpaceError('邻接矩阵必须对称')

        labels = tuple(str(label) for label in self.labels)
        if len(labels) != n:
            raise DimensionMismatchError(f'标签数量 {len(labels)} 与节点数 {n} 不一致')
        if len(set(labels)) != n:
            raise LatentSpaceError('节点标签必须唯一')

        adj = adj.astype(float)
        adj.setflags(write=False)
        object.__setattr__(self, 'adj', adj)
        object.__setattr__(self, 'labels', labels)

    @classmethod
    def from_adjacency(cls, adj, labels: Optional[Sequence[str]] = None) -> 'Graph':
        """从邻接矩阵构造，缺省标签为 v0, v1, ..."""
        adj = np.asarray(adj)
        if labels is None:
            width = len(str(max(adj.shape[0] - 1, 0)))
            labels = [f'v{i:0{width}d}' for i in range(adj.shape[0])]
        return cls(adj=adj, labels=tuple(labels))

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.adj, 1).sum())

    @property
    def density(self) -> float:
        return self.edge_count / (self.n * (self.n - 1) / 2)

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    def subgraph(self, indices: Sequence[int]) -> 'Graph':
        """按给定顺序取诱导子图"""
        idx = np.asarray(indices, dtype=int)
        return Graph(adj=self.adj[np.ix_(idx, idx)], labels=tuple(self.labels[i] for i in idx))


@dataclass(frozen=True)
class MaskedGraph:
    """
    带观测掩码的网络

    observed[i, j] = True 表示节点对 (i, j) 参与似然计算;
    掩码对称，对角线是否观测由生成方决定
    """

    graph: Graph
    observed: np.ndarray

    def __post_init__(self):
        observed = np.asarray(self.observed, dtype=bool)
        if observed.shape != self.graph.adj.shape:
            raise DimensionMismatchError(
                f'掩码形状 {observed.shape} 与图 {self.graph.adj.shape} 不一致')
        if not np.array_equal(observed, observed.T):
            raise LatentSpaceError('观测掩码必须对称')
        observed = observed.copy()
        observed.setflags(write=False)
        object.__setattr__(self, 'observed', observed)


def upper_pairs(n: int) -> PairSet:
    """全部非对角无序节点对"""
    return np.triu_indices(n, 1)


def pairs_to_mask(n: int, pairs: PairSet) -> np.ndarray:
    """节点对集合 -> 对称布尔掩码 (对角线为 False)"""
    rows, cols = pairs
    mask = np.zeros((n, n), dtype=bool)
    mask[rows, cols] = True
    mask[cols, rows] = True
    np.fill_diagonal(mask, False)
    return mask


def as_pairs(heldout: Union[PairSet, np.ndarray], n: Optional[int] = None) -> PairSet:
    """
    统一节点对表示

    Args:
        heldout: (rows, cols) 元组、(m, 2) 数组或 n×n 布尔掩码
        n: 节点数，用于校验

    Returns:
        (rows, cols)，每个无序对一次，行下标小于列下标
    """
    if isinstance(heldout, tuple) and len(heldout) == 2:
        rows = np.asarray(heldout[0], dtype=int)
        cols = np.asarray(heldout[1], dtype=int)
    else:
        arr = np.asarray(heldout)
        if arr.dtype == bool and arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
            rows, cols = np.nonzero(np.triu(arr, 1))
        elif arr.ndim == 2 and arr.shape[1] == 2:
            rows, cols = arr[:, 0].astype(int), arr[:, 1].astype(int)
        else:
            raise DimensionMismatchError(f'无法识别的节点对格式, 形状 {arr.shape}')

    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    if np.any(lo == hi):
        raise LatentSpaceError('节点对集合不能包含对角元')
    if n is not None and lo.size and hi.max() >= n:
        raise DimensionMismatchError(f'节点对下标越界 (n={n})')
    if lo.size == 0:
        raise EmptyHoldoutError('留出节点对集合为空')
    return lo, hi
