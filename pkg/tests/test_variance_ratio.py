# tests/test_variance_ratio.py
import math

import numpy as np
import pytest

from common.api_error import DegenerateVarianceError, DomainError
from app.core import mlp_a, mlp_b
from app.metrics import ensemble_g0, estimate_gamma, gamma_vs_shift, output_gamma, pooled_gamma
from app.schemas import DataSpec, NetworkConfig, NormKind, NormPlacement

SMALL_DATA = DataSpec(n=300, seed=2)


class TestPooledGamma:
    def test_recovers_known_ratio(self, rng):
        means = rng.normal(0.0, math.sqrt(0.5), size=(400, 50))
        variances = np.full((400, 50), 2.0)
        estimate = pooled_gamma(means, variances, layer=3)
        assert estimate.layer == 3
        assert estimate.gamma == pytest.approx(0.25, rel=0.05)
        assert estimate.gamma_per_node == pytest.approx(0.25, rel=0.05)
        assert 0 < estimate.gamma_se < 0.01
        assert (estimate.n_runs, estimate.n_nodes) == (400, 50)

    def test_jackknife_error_shrinks_with_runs(self, rng):
        few = pooled_gamma(rng.standard_normal((20, 10)), np.ones((20, 10)))
        many = pooled_gamma(rng.standard_normal((500, 10)), np.ones((500, 10)))
        assert many.gamma_se < few.gamma_se

    def test_zero_variance(self):
        with pytest.raises(DegenerateVarianceError):
            pooled_gamma(np.ones((5, 3)), np.zeros((5, 3)))

    def test_single_run(self):
        with pytest.raises(DomainError):
            pooled_gamma(np.ones((1, 3)), np.ones((1, 3)))


class TestEstimateGamma:
    def test_every_layer_by_default(self, make_config):
        config = make_config(hidden_widths=(16, 16))
        report = estimate_gamma(config, SMALL_DATA, n_runs=10)
        assert [e.layer for e in report.layers] == [1, 2, 3]
        assert report.n_samples == 300
        assert report.seeds == tuple(range(10))

    def test_first_layer_is_nearly_unbiased(self, make_config):
        # dataset means of W x are tiny for centered inputs
        report = estimate_gamma(make_config(), SMALL_DATA, n_runs=20, layer=1)
        assert report.at(1).gamma < 0.05

    def test_threads_do_not_change_results(self, make_config):
        config = make_config(NormKind.LAYER, NormPlacement.PRE_ACTIVATION)
        one = estimate_gamma(config, SMALL_DATA, n_runs=12, threads=1)
        many = estimate_gamma(config, SMALL_DATA, n_runs=12, threads=3)
        assert one.layers == many.layers

    def test_needs_ten_runs(self, make_config):
        with pytest.raises(DomainError):
            estimate_gamma(make_config(), SMALL_DATA, n_runs=9)

    def test_layer_range(self, make_config):
        with pytest.raises(DomainError):
            estimate_gamma(make_config(), SMALL_DATA, n_runs=10, layer=3)

    def test_matches_ensemble_output_gamma(self, make_config):
        config = make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION)
        report = estimate_gamma(config, SMALL_DATA, n_runs=10, layer=2)
        from_ensemble = output_gamma(ensemble_g0(config, SMALL_DATA, n_runs=10))
        assert report.at(2).gamma == pytest.approx(from_ensemble.gamma, rel=1e-10)

    def test_input_shift_raises_gamma(self, make_config):
        config = make_config(hidden_widths=(32,), input_dim=20)
        spec = DataSpec(n=300, seed=5)
        by_shift = gamma_vs_shift(config, spec, shifts=[0.0, 2.0], n_runs=30)
        assert [c for c, _ in by_shift] == [0.0, 2.0]
        assert by_shift[1][1].gamma > by_shift[0][1].gamma

    def test_output_gamma_does_not_fall_with_shift(self, make_config):
        config = make_config(hidden_widths=(32, 32), input_dim=20)
        by_shift = gamma_vs_shift(config, DataSpec(n=300, seed=5), [0.0, 0.5, 1.0], n_runs=60)
        gammas = [e.gamma for _, e in by_shift]
        assert gammas[0] <= gammas[1] <= gammas[2]


class TestAcceptance:
    @pytest.mark.slow
    def test_bn_pre_output_gamma(self):
        # input width does not enter the full-batch prediction
        config = mlp_a(
            NormKind.BATCH, NormPlacement.PRE_ACTIVATION, input_dim=50, hidden_widths=(1000,)
        )
        report = estimate_gamma(config, DataSpec(n=1_000), n_runs=2_000, layer=2, threads=4)
        assert report.at(2).gamma == pytest.approx(1.0 / (math.pi - 1.0), rel=0.1)

    @pytest.mark.slow
    def test_ln_pre_follows_unnormalized_network(self):
        ln = mlp_b(NormKind.LAYER, NormPlacement.PRE_ACTIVATION, input_dim=100)
        plain = NetworkConfig(input_dim=100, hidden_widths=(100,) * 20)
        spec = DataSpec(n=1_000)
        a = estimate_gamma(ln, spec, n_runs=200, threads=4)
        b = estimate_gamma(plain, spec, n_runs=200, threads=4)
        for ea, eb in zip(a.layers[:-1], b.layers[:-1]):
            assert ea.gamma == pytest.approx(eb.gamma, rel=0.1)
