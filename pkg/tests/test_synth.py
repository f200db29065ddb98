# coding: utf-8
"""
模拟数据生成测试
"""
import numpy as np
import pytest

from models.errors import ConfigError
from services.synth_service import (
    GroundTruth,
    ScenarioConfig,
    centered_frame,
    gen_target,
    generate_ensemble,
    random_orthogonal,
    sample_graph,
    source_sizes,
)
from utils.core_math import nuclear_norm, sigmoid
from utils.seeds import derive_seed, rng_for


class TestScenarioConfig:

    def test_aliases(self):
        cfg = ScenarioConfig(size_scenario='2', delta_case='ii')
        assert cfg.size_scenario == 'mixed'
        assert cfg.delta_case == 'five15'

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(size_scenario='triple')
        with pytest.raises(ConfigError):
            ScenarioConfig(L=3, a_size=4)
        with pytest.raises(ConfigError):
            ScenarioConfig(n=2, k=2)

    @pytest.mark.parametrize('scenario, low, high', [
        ('equal', 1, 1),
        ('double', 2, 2),
        ('mixed', 1, 2),
    ])
    def test_source_sizes(self, scenario, low, high):
        cfg = ScenarioConfig(n=40, L=7, size_scenario=scenario)
        sizes = source_sizes(cfg, np.random.default_rng(0))
        assert len(sizes) == 7
        assert all(low * 40 <= size <= high * 40 for size in sizes)
        if scenario == 'mixed':
            assert sizes[5:] == [80, 80]


class TestGenerate:

    def test_deterministic(self, scenario):
        first, _ = generate_ensemble(scenario)
        second, _ = generate_ensemble(scenario)
        assert np.array_equal(first.target.adj, second.target.adj)
        for a, b in zip(first.sources, second.sources):
            assert np.array_equal(a.adj, b.adj)

    def test_different_seed(self, scenario):
        first, _ = generate_ensemble(scenario)
        second, _ = generate_ensemble(scenario.with_seed(8))
        assert not np.array_equal(first.target.adj, second.target.adj)

    def test_centered_truth(self, ensemble):
        _, truth = ensemble
        assert np.allclose(truth.z_t_star.mean(axis=0), 0)
        for source in truth.sources:
            assert np.allclose(source.u0l_star.mean(axis=0), 0)
            if source.u_l_star.shape[0]:
                assert np.allclose(source.u_l_star.mean(axis=0), 0)

    @pytest.mark.parametrize('case', ['zero15', 'five15'])
    def test_perturbation_size(self, case):
        """‖U₀l* − Z^{t*}‖_* = k·δ_l"""
        cfg = ScenarioConfig(n=25, L=4, a_size=2, k=2, delta_case=case, seed=2)
        _, truth = generate_ensemble(cfg)
        for source in truth.sources:
            distance = nuclear_norm(source.u0l_star - truth.z_t_star)
            assert distance == pytest.approx(2 * source.delta_l, abs=1e-8)

    def test_uniform_case_ranges(self):
        cfg = ScenarioConfig(n=25, L=6, a_size=3, delta_case='iii', seed=4)
        _, truth = generate_ensemble(cfg)
        assert all(0 <= s.delta_l <= 5 for s in truth.sources[:3])
        assert all(10 <= s.delta_l <= 15 for s in truth.sources[3:])

    def test_informative_flags_and_labels(self, ensemble, scenario):
        problem, truth = ensemble
        assert truth.informative == [True, True, False]
        assert truth.informative_indices == [0, 1]
        for source in problem.sources:
            assert source.labels[:scenario.n] == problem.target.labels
            assert np.array_equal(source.adj, source.adj.T)
            assert not source.adj.diagonal().any()

    def test_alpha_ranges(self, ensemble, scenario):
        _, truth = ensemble
        low, high = scenario.alpha_t_range
        assert truth.alpha_t_star.min() >= low
        assert truth.alpha_t_star.max() <= high

    def test_truth_dict(self, ensemble):
        _, truth = ensemble
        restored = GroundTruth.from_dict(truth.to_dict())
        assert np.allclose(restored.theta_t_star, truth.theta_t_star)
        assert restored.informative == truth.informative


class TestSampling:

    def test_pair_frequencies(self):
        """每个节点对的连边频率接近 σ(θ_ij)"""
        theta = np.array([[0.0, -2.0, 1.0],
                          [-2.0, 0.0, 0.5],
                          [1.0, 0.5, 0.0]])
        rng = rng_for(9, 'draws')
        draws = 2000
        counts = sum(sample_graph(theta, rng).adj for _ in range(draws))
        rows, cols = np.triu_indices(3, 1)
        p = sigmoid(theta[rows, cols])
        sd = np.sqrt(p * (1 - p) / draws)
        assert np.all(np.abs(counts[rows, cols] / draws - p) <= 4 * sd)
        assert not np.diag(counts).any()

    def test_target_edge_count(self):
        """目标网络边数与 Σσ(θ*_ij) 的偏差在 4 倍标准差内"""
        graph, truth = gen_target(ScenarioConfig(n=200, L=1, a_size=1, seed=3))
        rows, cols = np.triu_indices(200, 1)
        p = sigmoid(truth.theta_t_star[rows, cols])
        edges = graph.adj[rows, cols].sum()
        assert abs(edges - p.sum()) <= 4 * np.sqrt(np.sum(p * (1 - p)))

    def test_default_densities(self):
        """默认参数下目标网络约 8% 密度，可迁移源网络约 21%"""
        target, source = [], []
        for seed in range(20):
            problem, _ = generate_ensemble(ScenarioConfig(n=200, L=1, a_size=1,
                                                          size_scenario='equal', seed=seed))
            target.append(problem.target.density)
            source.append(problem.sources[0].density)
        assert 0.06 <= np.mean(target) <= 0.10
        assert 0.17 <= np.mean(source) <= 0.25


class TestRandomMatrices:

    def test_random_orthogonal(self):
        q = random_orthogonal(4, np.random.default_rng(0))
        assert np.allclose(q.T @ q, np.eye(4))

    def test_centered_frame(self):
        v = centered_frame(20, 3, np.random.default_rng(1))
        assert np.allclose(v.T @ v, np.eye(3))
        assert np.allclose(v.mean(axis=0), 0)


class TestSeeds:

    def test_derive_seed_stable(self):
        assert derive_seed(5, 'mask', 2) == derive_seed(5, 'mask', 2)
        assert derive_seed(5, 'mask', 2) != derive_seed(5, 'mask', 3)
        assert derive_seed(5, 'cv', 'a') != derive_seed(5, 'cv', 'b')

    def test_rng_for(self):
        assert rng_for(1, 'layout').random() == rng_for(1, 'layout').random()
