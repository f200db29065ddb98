# coding: utf-8
"""
数值核心测试
"""
import numpy as np
import pytest

from models.errors import ConfigError, DimensionMismatchError
from models.latent import LatentState
from services.synth_service import random_orthogonal
from utils.core_math import (
    build_theta,
    center_and_bound,
    center_rows,
    heldout_nll,
    log_odds,
    nll,
    nll_gradient,
    nuclear_norm,
    procrustes_distance,
    prox_nuclear,
    sigmoid,
    softplus,
)


class TestLink:

    def test_sigmoid_extremes(self):
        """极端输入不溢出"""
        values = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
        assert np.all(np.isfinite(values))
        assert values[1] == pytest.approx(0.5)
        assert values[0] == pytest.approx(0.0)
        assert values[2] == pytest.approx(1.0)

    def test_sigmoid_symmetry(self):
        x = np.array([-3.0, 0.7, 12.0])
        assert np.allclose(sigmoid(x) + sigmoid(-x), 1.0)

    def test_softplus(self):
        assert softplus(0.0) == pytest.approx(np.log(2))
        assert softplus(1000.0) == pytest.approx(1000.0)
        assert softplus(-1000.0) == pytest.approx(0.0)


class TestLikelihood:

    def test_log_odds_by_hand(self):
        state = LatentState(alpha=np.array([1.0, -1.0]), z=np.array([[2.0], [3.0]]))
        assert np.allclose(log_odds(state), [[6.0, 6.0], [6.0, 7.0]])

    def test_nll_matches_double_loop(self):
        rng = np.random.default_rng(4)
        upper = np.triu(rng.random((5, 5)) < 0.5, 1)
        adj = (upper | upper.T).astype(float)
        theta = rng.normal(size=(5, 5))
        theta = theta + theta.T
        expected = 0.0
        for i in range(5):
            for j in range(5):
                p = 1.0 / (1.0 + np.exp(-theta[i, j]))
                expected -= adj[i, j] * theta[i, j] + np.log(1.0 - p)
        assert nll(adj, theta) == pytest.approx(expected, rel=1e-12)

    def test_gradient_vanishes_at_probabilities(self):
        """A 取 σ(θ) 时梯度为零"""
        rng = np.random.default_rng(6)
        state = LatentState(alpha=rng.normal(size=6), z=rng.normal(size=(6, 2)))
        probabilities = sigmoid(log_odds(state))
        grad_alpha, grad_z = nll_gradient(probabilities, state)
        assert np.allclose(grad_alpha, 0)
        assert np.allclose(grad_z, 0)

    def test_nll_at_zero_theta(self):
        """θ = 0 时每个 (i, j) 贡献 log 2，包括对角线"""
        adj = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        assert nll(adj, np.zeros((3, 3))) == pytest.approx(9 * np.log(2))

    def test_nll_weights(self):
        adj = np.zeros((3, 3))
        weights = np.zeros((3, 3))
        weights[0, 1] = weights[1, 0] = 1
        assert nll(adj, np.zeros((3, 3)), weights) == pytest.approx(2 * np.log(2))

    def test_nll_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            nll(np.zeros((3, 3)), np.zeros((4, 4)))

    def test_gradient_matches_finite_differences(self, random_graph):
        """解析梯度与中心差分一致"""
        rng = np.random.default_rng(0)
        n = random_graph.n
        alpha = rng.normal(-0.5, 0.3, n)
        z = rng.normal(0, 0.5, (n, 2))
        grad_alpha, grad_z = nll_gradient(random_graph, LatentState(alpha=alpha, z=z))

        eps = 1e-6
        for i in (0, 7):
            step = np.zeros(n)
            step[i] = eps
            numeric = (nll(random_graph, build_theta(alpha + step, z))
                       - nll(random_graph, build_theta(alpha - step, z))) / (2 * eps)
            assert grad_alpha[i] == pytest.approx(numeric, rel=1e-4, abs=1e-6)

        for i, c in ((2, 0), (11, 1)):
            step = np.zeros_like(z)
            step[i, c] = eps
            numeric = (nll(random_graph, build_theta(alpha, z + step))
                       - nll(random_graph, build_theta(alpha, z - step))) / (2 * eps)
            assert grad_z[i, c] == pytest.approx(numeric, rel=1e-4, abs=1e-6)

    def test_rotation_invariance(self, random_graph):
        """Z 右乘正交矩阵不改变似然"""
        rng = np.random.default_rng(1)
        alpha = rng.normal(size=random_graph.n)
        z = rng.normal(size=(random_graph.n, 3))
        o = random_orthogonal(3, rng)
        assert nll(random_graph, build_theta(alpha, z @ o)) == \
            pytest.approx(nll(random_graph, build_theta(alpha, z)))

    def test_heldout_nll_at_zero_theta(self):
        adj = np.ones((4, 4)) - np.eye(4)
        pairs = (np.array([0, 1, 2]), np.array([1, 2, 3]))
        assert heldout_nll(adj, np.zeros((4, 4)), pairs) == pytest.approx(3 * np.log(2))


class TestMatrixOps:

    def test_center_rows(self):
        m = np.arange(12, dtype=float).reshape(4, 3)
        centered = center_rows(m)
        assert np.allclose(centered.mean(axis=0), 0)
        assert np.allclose(center_rows(centered), centered)

    def test_center_and_bound(self):
        m = 5.0 * np.random.default_rng(4).normal(size=(10, 2))
        bounded = center_and_bound(m, 1.0)
        assert np.linalg.norm(bounded, axis=1).max() <= 1.0 + 1e-12
        assert np.allclose(bounded.mean(axis=0), 0, atol=1e-12)
        assert np.allclose(center_and_bound(bounded, 1.0), bounded)

    def test_center_and_bound_inside_ball(self):
        m = np.array([[0.1, 0.0], [-0.1, 0.2], [0.0, -0.2]])
        assert np.allclose(center_and_bound(m, 1.0), center_rows(m))
        assert np.allclose(center_and_bound(m, None), center_rows(m))

    def test_prox_nuclear_diagonal(self):
        """奇异值软阈值: diag(3, 1), τ = 2 -> diag(1, 0)"""
        result = prox_nuclear(np.diag([3.0, 1.0]), 2.0)
        assert np.allclose(result, np.diag([1.0, 0.0]))

    def test_prox_nuclear_zero_tau(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.allclose(prox_nuclear(m, 0.0), m)

    def test_prox_nuclear_beats_random_candidates(self):
        """软阈值结果的目标值不大于附近任何候选点"""
        rng = np.random.default_rng(8)
        m = rng.normal(size=(6, 3))
        tau = 0.7

        def objective(x):
            return 0.5 * np.sum((x - m) ** 2) + tau * nuclear_norm(x)

        best = prox_nuclear(m, tau)
        for scale in (1e-3, 1e-1, 1.0):
            for _ in range(50):
                candidate = best + scale * rng.normal(size=m.shape)
                assert objective(best) <= objective(candidate) + 1e-12

    def test_prox_nuclear_negative_tau(self):
        with pytest.raises(ConfigError):
            prox_nuclear(np.eye(2), -1.0)

    def test_nuclear_norm(self):
        assert nuclear_norm(np.diag([3.0, -2.0])) == pytest.approx(5.0)

    def test_procrustes_recovers_rotation(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(10, 3))
        q = random_orthogonal(3, rng)
        dist, o = procrustes_distance(a, a @ q)
        assert dist == pytest.approx(0.0, abs=1e-10)
        assert np.allclose(o @ o.T, np.eye(3))

    def test_procrustes_matches_grid_search(self):
        """k = 2 时与旋转、反射的网格搜索一致"""
        rng = np.random.default_rng(5)
        a = rng.normal(size=(8, 2))
        b = rng.normal(size=(8, 2))
        dist, _ = procrustes_distance(a, b)
        angles = np.linspace(0.0, 2 * np.pi, 3600, endpoint=False)
        grid = []
        for t in angles:
            rotation = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
            for o in (rotation, rotation @ np.diag([1.0, -1.0])):
                grid.append(np.linalg.norm(a - b @ o))
        assert dist <= min(grid) + 1e-9
        assert min(grid) - dist < 1e-4

    def test_procrustes_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            procrustes_distance(np.zeros((3, 2)), np.zeros((3, 3)))
