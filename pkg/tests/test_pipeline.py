# coding: utf-8
"""
方法流水线测试
"""
import numpy as np
import pytest

from config import Config
from models.errors import ConfigError
from models.latent import FitConfig
from services.detect_service import DetectConfig
from services.pipeline_service import METHODS, PipelineSettings, choose_lambda, run_method


@pytest.fixture
def settings():
    return PipelineSettings(
        fit=FitConfig(max_iter=40),
        detect=DetectConfig(replicates=2, iota=0.5, lambda_policy='fixed', seed=1),
    )


class TestPipelineSettings:

    def test_from_config_overrides(self):
        settings = PipelineSettings.from_config(Config, k=3, seed=9, iota=1.5, lambda_value=4.0)
        assert settings.fit.k == 3
        assert settings.fit.seed == 9
        assert settings.detect.seed == 9
        assert settings.detect.iota == 1.5
        assert settings.lambda_value == 4.0
        assert settings.detect.lambda_value == 4.0
        assert settings.lambda_selection == 'fixed'

    def test_from_config_lambda_scales(self):
        settings = PipelineSettings.from_config(Config)
        assert settings.lambda_value is None
        assert settings.lambda_scale == pytest.approx(Config.LAMBDA_SCALE)
        assert settings.detect.lambda_policy == 'fixed'
        assert settings.detect.lambda_value is None
        assert settings.detect.fixed_lambda(200) == pytest.approx(200.0)
        assert settings.fit.radius == Config.FIT_RADIUS

    def test_unknown_selection(self):
        with pytest.raises(ConfigError):
            PipelineSettings(lambda_selection='oracle')

    def test_default_lambda_scales_with_n(self, ensemble, settings):
        problem, _ = ensemble
        u0 = np.zeros((problem.n, 2))
        assert choose_lambda(problem, u0, settings) == pytest.approx(0.3 * problem.n)

    def test_explicit_lambda_wins(self, ensemble):
        problem, _ = ensemble
        settings = PipelineSettings(lambda_value=2.5, lambda_scale=10.0)
        assert choose_lambda(problem, np.zeros((problem.n, 2)), settings) == 2.5


class TestRunMethod:

    def test_unknown_method(self, ensemble, settings):
        problem, _ = ensemble
        with pytest.raises(ConfigError):
            run_method('TLX', problem, settings)

    def test_tlk_requires_informative(self, ensemble, settings):
        problem, _ = ensemble
        with pytest.raises(ConfigError):
            run_method('TLK', problem, settings)

    @pytest.mark.parametrize('method', METHODS)
    def test_shapes(self, ensemble, settings, method):
        problem, truth = ensemble
        result = run_method(method, problem, settings, informative=truth.informative_indices)
        assert result.method == method
        assert result.alpha_t.shape == (problem.n,)
        assert result.z_t.shape == (problem.n, 2)
        p = result.probabilities()
        assert np.all((p >= 0) & (p <= 1))
        if method in ('TLD', 'TLE'):
            assert result.detection is not None
        else:
            assert result.detection is None

    def test_tlk_uses_given_sources(self, ensemble, settings):
        problem, truth = ensemble
        result = run_method('TLK', problem, settings, informative=[1, 0])
        assert result.selected == (0, 1)
        assert result.lam == pytest.approx(0.3 * problem.n)

    def test_tld_with_everything_selected_matches_tlb(self, ensemble):
        """ι = ∞ 时检测选中全部源网络，TLD 与 TLB 相同"""
        problem, _ = ensemble
        settings = PipelineSettings(
            fit=FitConfig(max_iter=40),
            detect=DetectConfig(replicates=2, iota=np.inf, lambda_policy='fixed'),
        )
        tld = run_method('TLD', problem, settings)
        tlb = run_method('TLB', problem, settings)
        assert tld.selected == tuple(range(problem.size))
        assert np.allclose(tld.z_t, tlb.z_t)
        assert np.allclose(tld.alpha_t, tlb.alpha_t)

    def test_one_mode_ignores_sources(self, ensemble, settings):
        problem, _ = ensemble
        full = run_method('one-mode', problem, settings)
        alone = run_method('one-mode', problem.subset([0]), settings)
        assert np.allclose(full.z_t, alone.z_t)
        assert full.selected == ()
