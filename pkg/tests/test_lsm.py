# coding: utf-8
"""
单网络拟合测试 (谱初始化 + 投影梯度下降)
"""
import logging

import numpy as np
import pytest

from models.errors import ConfigError, LatentSpaceError, NonFiniteError, RankDeficientWarning
from models.graph import Graph, MaskedGraph
from models.latent import FitConfig
from services.lsm_service import fit_single, observation_weights, spectral_init
from services.optim import GradientSolver, operator_norm
from utils.core_math import build_theta, sigmoid


class TestGraph:

    def test_asymmetric_rejected(self):
        with pytest.raises(LatentSpaceError):
            Graph.from_adjacency(np.array([[0, 1], [0, 0]]))

    def test_too_small(self):
        with pytest.raises(LatentSpaceError):
            Graph.from_adjacency(np.zeros((1, 1)))

    def test_subgraph_keeps_order(self, two_cliques):
        sub = two_cliques.subgraph([12, 0, 1])
        assert sub.labels == (two_cliques.labels[12], two_cliques.labels[0], two_cliques.labels[1])
        assert sub.adj[1, 2] == 1
        assert sub.adj[0, 1] == 0


class TestSpectralInit:

    def test_k_out_of_range(self, two_cliques):
        with pytest.raises(ConfigError):
            spectral_init(two_cliques, 0)
        with pytest.raises(ConfigError):
            spectral_init(two_cliques, two_cliques.n)

    def test_complete_graph_is_rank_deficient(self):
        """完全图的替代矩阵双中心化后为零，所有方向都置零"""
        graph = Graph.from_adjacency(np.ones((8, 8), dtype=int) - np.eye(8, dtype=int))
        with pytest.warns(RankDeficientWarning):
            state = spectral_init(graph, 2)
        assert np.allclose(state.z, 0)
        assert np.allclose(state.alpha, state.alpha[0])

    def test_two_cliques_are_separated(self, two_cliques):
        state = spectral_init(two_cliques, 1)
        first, second = np.sign(state.z[:10, 0]), np.sign(state.z[10:, 0])
        assert len(set(first)) == 1
        assert len(set(second)) == 1
        assert first[0] != second[0]

    def test_negative_eigenvalue_ranks_by_magnitude(self):
        """完全二部图的结构落在一个负特征值上，按 |λ| 排序时 k=1 也能分开两侧"""
        adj = np.zeros((12, 12), dtype=int)
        adj[:6, 6:] = 1
        adj[6:, :6] = 1
        state = spectral_init(Graph.from_adjacency(adj), 1)
        left, right = np.sign(state.z[:6, 0]), np.sign(state.z[6:, 0])
        assert len(set(left)) == 1
        assert len(set(right)) == 1
        assert left[0] != right[0]
        assert np.allclose(np.abs(state.z[:, 0]), np.abs(state.z[0, 0]))

    def test_deterministic_and_centered(self, random_graph):
        a = spectral_init(random_graph, 2)
        b = spectral_init(random_graph, 2)
        assert np.array_equal(a.z, b.z)
        assert np.array_equal(a.alpha, b.alpha)
        assert np.allclose(a.z.mean(axis=0), 0)


class TestFitSingle:

    def test_zero_iterations_returns_init(self, random_graph):
        cfg = FitConfig(k=2, max_iter=0)
        result = fit_single(random_graph, cfg)
        init = spectral_init(random_graph, 2)
        assert result.iterations == 0
        assert result.converged is False
        assert len(result.objective_trace) == 1
        assert np.allclose(result.state.z, init.z)

    def test_objective_non_increasing(self, random_graph, fast_fit):
        trace = fit_single(random_graph, fast_fit).objective_trace
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
        assert trace[-1] < trace[0]

    def test_positions_centered(self, random_graph, fast_fit):
        result = fit_single(random_graph, fast_fit)
        assert np.allclose(result.state.z.mean(axis=0), 0, atol=1e-10)
        assert result.state.z.shape == (random_graph.n, 2)

    def test_cliques_probabilities(self, two_cliques):
        """团内连边概率高于团间"""
        result = fit_single(two_cliques, FitConfig(k=1, max_iter=200))
        p = sigmoid(build_theta(result.state.alpha, result.state.z))
        assert p[0, 1] > p[0, 15]
        assert p[12, 13] > p[3, 12]

    def test_full_mask_matches_unmasked(self, random_graph, fast_fit):
        """全部观测的掩码与不传掩码一致"""
        mask = MaskedGraph(random_graph, np.ones((random_graph.n, random_graph.n), dtype=bool))
        plain = fit_single(random_graph, fast_fit)
        masked = fit_single(random_graph, fast_fit, mask)
        assert np.allclose(plain.state.z, masked.state.z)
        assert np.allclose(plain.state.alpha, masked.state.alpha)

    def test_rows_within_radius(self, random_graph):
        cfg = FitConfig(k=2, max_iter=60, radius=0.5)
        result = fit_single(random_graph, cfg)
        assert np.linalg.norm(result.state.z, axis=1).max() <= 0.5 + 1e-9
        assert np.allclose(result.state.z.mean(axis=0), 0, atol=1e-10)
        trace = result.objective_trace
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))

    def test_mask_shape_checked(self, random_graph):
        with pytest.raises(ConfigError):
            observation_weights(np.ones((3, 3), dtype=bool), random_graph.n)


class TestGradientSolver:

    def test_quadratic_converges(self):
        """min ‖x − 3‖² + 1"""
        cfg = FitConfig(max_iter=500, tol=1e-12)
        solver = GradientSolver(
            cfg,
            objective=lambda b: float(np.sum((b[0] - 3.0) ** 2)) + 1.0,
            gradient=lambda b: [2.0 * (b[0] - 3.0)],
            project=lambda b, steps: b,
        )
        outcome = solver.run([np.zeros(4)], [0.1])
        assert np.allclose(outcome.blocks[0], 3.0, atol=1e-4)
        assert outcome.converged is True

    def test_stall_is_not_convergence(self, caplog):
        """梯度方向错误时回溯无法下降: 停止但不算收敛"""
        cfg = FitConfig(max_iter=50, tol=1e-12)
        solver = GradientSolver(
            cfg,
            objective=lambda b: float(np.sum((b[0] - 3.0) ** 2)),
            gradient=lambda b: [-2.0 * (b[0] - 3.0)],
            project=lambda b, steps: b,
            name='uphill',
        )
        with caplog.at_level(logging.WARNING, logger='services.optim'):
            outcome = solver.run([np.zeros(2)], [0.1])
        assert outcome.converged is False
        assert outcome.iterations == 0
        assert np.array_equal(outcome.blocks[0], np.zeros(2))
        assert any('uphill' in record.getMessage() for record in caplog.records)

    def test_divergence_without_backtracking(self):
        cfg = FitConfig(max_iter=5, backtracking=False)
        solver = GradientSolver(
            cfg,
            objective=lambda b: float(np.exp(b[0][0])),
            gradient=lambda b: [np.array([-1e6])],
            project=lambda b, steps: b,
        )
        with pytest.raises(NonFiniteError):
            solver.run([np.zeros(1)], [1.0])

    def test_operator_norm(self):
        assert operator_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0)
