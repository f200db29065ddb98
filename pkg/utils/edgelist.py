# coding: utf-8
"""
边列表文件解析
UTF-8 文本，每行两个以空白分隔的节点标签，# 开头为注释；
可选节点文件每行一个标签，定义节点顺序 (也用于表示孤立节点)
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.errors import (
    AmbiguousAlignmentError,
    DuplicateNodeError,
    MissingNodeError,
    ParseError,
    SelfLoopError,
)
from models.graph import Graph
from models.latent import TransferProblem

logger = logging.getLogger(__name__)

NODE_SUFFIX = '.nodes'


def _content_lines(path):
    """(行号, 去掉注释后的内容)，跳过空行"""
    with open(path, 'r', encoding='utf-8') as f:
        for number, raw in enumerate(f, start=1):
            line = raw.split('#', 1)[0].strip()
            if line:
                yield number, line


def companion_node_file(path) -> Path:
    """edges 文件对应的节点文件: 同名、后缀为 .nodes"""
    return Path(path).with_suffix(NODE_SUFFIX)


def read_node_file(path) -> List[str]:
    """读取节点文件，出现重复标签时抛出 DuplicateNodeError"""
    labels = []
    seen = set()
    for number, line in _content_lines(path):
        tokens = line.split()
        if len(tokens) != 1:
            raise ParseError('节点文件每行只能有一个标签', line=number, path=path)
        label = tokens[0]
        if label in seen:
            raise DuplicateNodeError(f'{path}:{number}: 重复的节点标签 {label!r}')
        seen.add(label)
        labels.append(label)
    return labels


def read_edges(path) -> List[Tuple[str, str, int]]:
    """读取边列表，返回 (u, v, 行号)"""
    edges = []
    for number, line in _content_lines(path):
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f'每行需要两个节点标签, 实际为 {len(tokens)} 个', line=number, path=path)
        u, v = tokens
        if u == v:
            raise SelfLoopError(u, line=number)
        edges.append((u, v, number))
    return edges


def load_graph(path, nodes_path=None) -> Graph:
    """
    读取网络

    Args:
        path: 边列表文件
        nodes_path: 节点文件；为 None 时使用同名 .nodes 文件 (若存在)，
            否则节点集合取边的端点并按字典序排列

    Returns:
        Graph: 对称、去重后的网络
    """
    path = Path(path)
    edges = read_edges(path)
    if nodes_path is None and companion_node_file(path).exists():
        nodes_path = companion_node_file(path)

    if nodes_path is not None:
        labels = read_node_file(nodes_path)
    else:
        labels = sorted({label for u, v, _ in edges for label in (u, v)})

    index = {label: i for i, label in enumerate(labels)}
    adj = np.zeros((len(labels), len(labels)), dtype=int)
    for u, v, number in edges:
        if u not in index or v not in index:
            missing = u if u not in index else v
            raise ParseError(f'节点 {missing!r} 不在节点文件中', line=number, path=path)
        adj[index[u], index[v]] = 1
        adj[index[v], index[u]] = 1

    graph = Graph(adj=adj, labels=tuple(labels))
    logger.debug('读取网络 %s: %d 个节点, %d 条边', path, graph.n, graph.edge_count)
    return graph


def save_graph(graph: Graph, path, nodes_path=None):
    """
    写出网络: 边列表 + 节点文件 (默认同名 .nodes)，每条无向边写一次
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nodes_path = Path(nodes_path) if nodes_path is not None else companion_node_file(path)
    rows, cols = np.nonzero(np.triu(graph.adj, 1))
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f'# {graph.n} nodes, {len(rows)} edges\n')
        for i, j in zip(rows, cols):
            f.write(f'{graph.labels[i]}\t{graph.labels[j]}\n')
    with open(nodes_path, 'w', encoding='utf-8') as f:
        for label in graph.labels:
            f.write(f'{label}\n')


def read_alignment(path) -> Dict[str, str]:
    """
    读取对齐文件: 每行 "目标标签 源标签"

    Returns:
        目标标签 -> 源标签；不是单射时抛出 AmbiguousAlignmentError
    """
    mapping: Dict[str, str] = {}
    used: Dict[str, str] = {}
    for number, line in _content_lines(path):
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError('对齐文件每行需要两个标签', line=number, path=path)
        target_label, source_label = tokens
        if target_label in mapping:
            raise AmbiguousAlignmentError(f'{path}:{number}: 目标节点 {target_label!r} 重复对齐')
        if source_label in used:
            raise AmbiguousAlignmentError(
                f'{path}:{number}: 源节点 {source_label!r} 同时对齐到 '
                f'{used[source_label]!r} 和 {target_label!r}')
        mapping[target_label] = source_label
        used[source_label] = target_label
    return mapping


def resolve_alignment(target: Graph, source: Graph, name: str,
                      mapping: Optional[Dict[str, str]] = None) -> Tuple[int, ...]:
    """
    目标节点 -> 源网络下标

    Args:
        mapping: 对齐文件内容；为 None 时按相同标签匹配
    """
    alignment = []
    for label in target.labels:
        source_label = label if mapping is None else mapping.get(label)
        if source_label is None or source_label not in source.labels:
            raise MissingNodeError(label, name)
        alignment.append(source.index_of(source_label))
    return tuple(alignment)


def _unique_names(paths: Sequence[Path]) -> List[str]:
    names = []
    for path in paths:
        name = path.stem
        candidate, suffix = name, 2
        while candidate in names:
            candidate = f'{name}_{suffix}'
            suffix += 1
        names.append(candidate)
    return names


def load_problem(target_path, source_paths: Sequence, alignment_paths: Optional[Sequence] = None,
                 names: Optional[Sequence[str]] = None) -> TransferProblem:
    """
    读取迁移问题

    Args:
        target_path: 目标网络边列表
        source_paths: 源网络边列表
        alignment_paths: 与 source_paths 一一对应的对齐文件，元素可以为 None (按标签匹配)
        names: 源网络名称，默认取文件名

    Returns:
        TransferProblem
    """
    source_paths = [Path(p) for p in source_paths]
    if alignment_paths is None:
        alignment_paths = [None] * len(source_paths)
    if len(alignment_paths) != len(source_paths):
        raise ParseError('对齐文件数量与源网络数量不一致')
    names = list(names) if names is not None else _unique_names(source_paths)

    target = load_graph(target_path)
    sources, alignments = [], []
    for path, alignment_path, name in zip(source_paths, alignment_paths, names):
        source = load_graph(path)
        mapping = read_alignment(alignment_path) if alignment_path is not None else None
        alignments.append(resolve_alignment(target, source, name, mapping))
        sources.append(source)
    return TransferProblem(target=target, sources=tuple(sources),
                           alignments=tuple(alignments), names=tuple(names))


def save_problem(problem: TransferProblem, directory) -> Dict[str, object]:
    """
    写出迁移问题: target.edges 与每个源网络的 <name>.edges (节点标签共享，不需要对齐文件)

    Returns:
        {'target': 路径, 'sources': [路径, ...]}
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    target_path = directory / 'target.edges'
    save_graph(problem.target, target_path)
    source_paths = []
    for name, source in zip(problem.names, problem.ordered_sources):
        path = directory / f'{name}.edges'
        save_graph(source, path)
        source_paths.append(path)
    return {'target': target_path, 'sources': source_paths}
