# coding: utf-8
"""
去偏阶段与 λ 交叉验证测试
"""
import numpy as np
import pytest

from models.errors import ConfigError, DimensionMismatchError, EmptyGridError
from models.latent import DebiasConfig
from services.debias_service import (
    CVConfig,
    default_lambda_grid,
    fit_debias,
    pair_folds,
    penalized_objective,
    select_lambda,
)
from services.lsm_service import fit_single, spectral_init
from utils.core_math import nuclear_norm


@pytest.fixture
def u0(random_graph):
    return spectral_init(random_graph, 2).z


class TestPenalizedObjective:

    def test_oracle(self, random_graph):
        n = random_graph.n
        zeros = np.zeros((n, 2))
        base = penalized_objective(random_graph, zeros, np.zeros(n), zeros, lam=3.0)
        assert base == pytest.approx(n * n * np.log(2))

        delta = np.zeros((n, 2))
        delta[0, 0] = 1.0
        delta[1, 1] = -2.0
        value = penalized_objective(random_graph, zeros, np.zeros(n), delta, lam=3.0)
        smooth = penalized_objective(random_graph, zeros, np.zeros(n), delta, lam=0.0)
        assert value - smooth == pytest.approx(3.0 * 3.0)

    def test_shape_mismatch(self, random_graph):
        n = random_graph.n
        with pytest.raises(DimensionMismatchError):
            penalized_objective(random_graph, np.zeros((n, 2)), np.zeros(n), np.zeros((n, 3)), 1.0)


class TestFitDebias:

    def test_huge_lambda_shrinks_delta_to_zero(self, random_graph, u0):
        result = fit_debias(random_graph, u0, DebiasConfig(max_iter=30, lam=1e8))
        assert np.allclose(result.delta, 0)
        assert np.allclose(result.z_t, u0 - u0.mean(axis=0))

    def test_zero_lambda_matches_single_fit(self, random_graph, u0):
        """λ = 0 且 u0 取谱初始值时与单网络拟合一致"""
        cfg = DebiasConfig(max_iter=30, lam=0.0)
        result = fit_debias(random_graph, u0, cfg)
        single = fit_single(random_graph, cfg)
        assert np.allclose(result.z_t, single.state.z, atol=1e-6)
        assert np.allclose(result.alpha_t, single.state.alpha, atol=1e-6)

    def test_delta_centered_and_penalty_monotone(self, random_graph, u0):
        small = fit_debias(random_graph, u0, DebiasConfig(max_iter=60, lam=0.1))
        large = fit_debias(random_graph, u0, DebiasConfig(max_iter=60, lam=50.0))
        assert np.allclose(small.delta.mean(axis=0), 0, atol=1e-10)
        assert nuclear_norm(large.delta) <= nuclear_norm(small.delta) + 1e-9
        assert large.lam == 50.0

    def test_objective_non_increasing(self, random_graph, u0):
        trace = fit_debias(random_graph, u0, DebiasConfig(max_iter=40, lam=2.0)).objective_trace
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))


class TestSelectLambda:

    def test_single_value(self, random_graph, u0):
        assert select_lambda(random_graph, u0, [2.5]) == 2.5

    def test_duplicates_collapse(self, random_graph, u0):
        lam, table = select_lambda(random_graph, u0, [2.0, 2.0], return_table=True)
        assert lam == 2.0
        assert table.empty

    def test_empty_grid(self, random_graph, u0):
        with pytest.raises(EmptyGridError):
            select_lambda(random_graph, u0, [])

    def test_negative_value(self, random_graph, u0):
        with pytest.raises(ConfigError):
            select_lambda(random_graph, u0, [-1.0, 1.0])

    def test_grid_search(self, random_graph, u0):
        cfg = DebiasConfig(max_iter=20)
        grid = [0.1, 1e4]
        lam, table = select_lambda(random_graph, u0, grid, CVConfig(folds=2, seed=1),
                                   cfg=cfg, return_table=True)
        assert lam in grid
        assert list(table.columns) == ['lam', 'fold', 'loss']
        assert len(table) == 4
        assert np.all(np.isfinite(table['loss']))
        again = select_lambda(random_graph, u0, grid, CVConfig(folds=2, seed=1), cfg=cfg)
        assert again == lam

    def test_cv_config_folds(self):
        with pytest.raises(ConfigError):
            CVConfig(folds=1)

    def test_pair_folds_partition(self):
        folds = pair_folds(8, 3, seed=0)
        pairs = sorted(zip(np.concatenate([f[0] for f in folds]),
                           np.concatenate([f[1] for f in folds])))
        assert len(pairs) == 28
        assert len(set(pairs)) == 28
        assert all(i < j for i, j in pairs)

    def test_default_grid(self):
        grid = default_lambda_grid(100)
        assert len(grid) == 11
        assert grid[0] == pytest.approx(0.1)
        assert grid[-1] == pytest.approx(1000.0)
        assert grid[5] == pytest.approx(10.0)
