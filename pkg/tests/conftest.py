# coding: utf-8
"""
公共 fixture: 小规模网络与迁移问题
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# 添加父目录到路径
sys.path.insert(0, str(Path(__file__).parent.parent))

from models.graph import Graph  # noqa: E402
from models.latent import FitConfig  # noqa: E402
from services.synth_service import ScenarioConfig, generate_ensemble  # noqa: E402


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    """测试中串行执行，避免启动 joblib 进程"""
    monkeypatch.setenv('LSM_TRANSFER_THREADS', '1')


@pytest.fixture
def fast_fit():
    """迭代次数较少的拟合参数"""
    return FitConfig(k=2, max_iter=60, tol=1e-6)


@pytest.fixture
def two_cliques():
    """两个 10 节点完全子图，互不相连"""
    adj = np.zeros((20, 20), dtype=int)
    adj[:10, :10] = 1
    adj[10:, 10:] = 1
    np.fill_diagonal(adj, 0)
    return Graph.from_adjacency(adj)


@pytest.fixture
def scenario():
    """30 个目标节点、3 个源网络 (前 2 个可迁移)"""
    return ScenarioConfig(n=30, L=3, a_size=2, k=2, size_scenario='mixed',
                          delta_case='zero15', seed=7)


@pytest.fixture
def ensemble(scenario):
    """(TransferProblem, GroundTruth)"""
    return generate_ensemble(scenario)


@pytest.fixture
def random_graph():
    """15 个节点的随机网络"""
    rng = np.random.default_rng(3)
    upper = np.triu(rng.random((15, 15)) < 0.3, 1)
    return Graph.from_adjacency((upper | upper.T).astype(int))
