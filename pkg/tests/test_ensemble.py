# tests/test_ensemble.py
import numpy as np
import pytest

from common.api_error import DomainError, EmptyBatchError
from app.core import forward_minibatched, init_network, mlp_a, mlp_b, predict
from app.data import build_dataset
from app.metrics import (
    classify_guess,
    ensemble_g0,
    estimate_guess_stats,
    filter_initializations,
    guess_stats_from_predictions,
    histogram,
    ks_distance,
    ln_rms_gap,
    run_seeds,
)
from app.schemas import (
    DataSpec,
    FilterThresholds,
    GuessStats,
    NetworkConfig,
    NormKind,
    NormPlacement,
    Regime,
)

SMALL_DATA = DataSpec(n=200, seed=4)


class TestGuessStats:
    def test_counts_and_fractions(self):
        stats = guess_stats_from_predictions(np.array([0, 0, 1, 2, 0]), 3)
        assert stats.counts == (3, 1, 1)
        assert stats.g0 == pytest.approx(0.6)
        assert stats.ranked == (0.6, 0.2, 0.2)
        assert stats.top_fraction == pytest.approx(0.6)

    def test_dominant_class_tie(self):
        assert GuessStats(counts=(2, 5, 5)).dominant_class == 1

    def test_empty(self):
        with pytest.raises(EmptyBatchError):
            guess_stats_from_predictions(np.array([], dtype=np.int64), 2)

    def test_counts_are_integer_fractions(self, small_net, gaussian_inputs):
        stats = estimate_guess_stats(small_net, gaussian_inputs)
        assert stats.n == gaussian_inputs.n
        assert sum(stats.fractions) == pytest.approx(1.0)
        assert stats.g0 * stats.n == pytest.approx(round(stats.g0 * stats.n))


    @pytest.mark.parametrize(
        "kind,placement",
        [
            (NormKind.NONE, NormPlacement.ABSENT),
            (NormKind.BATCH, NormPlacement.PRE_ACTIVATION),
            (NormKind.LAYER, NormPlacement.POST_ACTIVATION),
        ],
    )
    def test_swapping_output_rows_mirrors_g0(self, make_config, gaussian_inputs, kind, placement):
        net = init_network(make_config(kind, placement), seed=3)
        swapped = net.with_parameters(
            weights=[*net.weights[:-1], net.weights[-1][::-1]],
            biases=[*net.biases[:-1], net.biases[-1][::-1]],
        )
        g0 = estimate_guess_stats(net, gaussian_inputs).g0
        assert estimate_guess_stats(swapped, gaussian_inputs).g0 == pytest.approx(1 - g0)


class TestHistogram:
    def test_bins_cover_unit_interval(self):
        h = histogram([0.0, 0.46, 0.5, 0.51, 1.0], bins=10)
        assert h.edges[0] == 0.0 and h.edges[-1] == 1.0
        assert sum(h.counts) == 5
        assert h.mass_within(0.4, 0.6) == pytest.approx(0.6)


class TestEnsemble:
    def test_seeds_and_shapes(self, make_config):
        result = ensemble_g0(make_config(), SMALL_DATA, n_runs=6, base_seed=10, bins=20)
        assert result.seeds == run_seeds(6, 10) == (10, 11, 12, 13, 14, 15)
        assert len(result.samples) == 6
        assert sum(result.histogram.counts) == 6
        assert result.output_means.shape == (6, 2)
        assert result.metadata["bn_statistics"] == "full_batch"

    def test_sample_is_guess_of_seed_network(self, make_config):
        config = make_config()
        result = ensemble_g0(config, SMALL_DATA, n_runs=3, base_seed=0)
        data = build_dataset(SMALL_DATA, input_dim=config.input_dim)
        assert result.samples[2] == estimate_guess_stats(init_network(config, 2), data).g0

    def test_threads_do_not_change_results(self, make_config):
        config = make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION)
        one = ensemble_g0(config, SMALL_DATA, n_runs=8, threads=1)
        many = ensemble_g0(config, SMALL_DATA, n_runs=8, threads=4)
        assert one.samples == many.samples
        np.testing.assert_array_equal(one.output_means, many.output_means)

    def test_fresh_data_per_run(self, make_config):
        spec = SMALL_DATA.model_copy(update={"fresh_per_run": True})
        result = ensemble_g0(make_config(), spec, n_runs=4)
        assert result.metadata["fresh_data_per_run"] is True

    def test_minibatch_statistics_when_batch_size_set(self, make_config):
        config = make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION, bn_batch_size=16)
        result = ensemble_g0(config, SMALL_DATA, n_runs=3, base_seed=0)
        assert result.metadata["bn_statistics"] == "mini_batch"
        assert result.metadata["bn_batch_size"] == 16
        data = build_dataset(SMALL_DATA, input_dim=config.input_dim)
        outputs, kept, _ = forward_minibatched(init_network(config, 1), data, 1)
        # 200 rows in blocks of 16 keep 192
        assert kept.size == 192
        stats = guess_stats_from_predictions(predict(outputs), config.num_classes)
        assert result.samples[1] == stats.g0

    def test_needs_two_runs(self, make_config):
        with pytest.raises(DomainError):
            ensemble_g0(make_config(), SMALL_DATA, n_runs=1)

    def test_post_norm_outputs_are_centered(self, make_config):
        # every hidden node has zero dataset mean, so output means equal the zero bias
        config = make_config(NormKind.BATCH, NormPlacement.POST_ACTIVATION)
        result = ensemble_g0(config, SMALL_DATA, n_runs=5)
        np.testing.assert_allclose(result.output_means, 0.0, atol=1e-10)


class TestFiltering:
    @pytest.mark.parametrize(
        "top,classes,regime",
        [
            (0.5, 2, Regime.NEUTRAL),
            (0.549, 2, Regime.NEUTRAL),
            (0.7, 2, Regime.WEAK_PREJUDICE),
            (0.95, 2, Regime.DEEP_PREJUDICE),
            (0.35, 3, Regime.NEUTRAL),
        ],
    )
    def test_classify(self, top, classes, regime):
        assert classify_guess(top, classes) == regime

    def test_custom_thresholds(self):
        thresholds = FilterThresholds(neutral_halfwidth=0.25, deep_threshold=0.8)
        assert classify_guess(0.7, 2, thresholds) == Regime.NEUTRAL
        assert classify_guess(0.8, 2, thresholds) == Regime.DEEP_PREJUDICE

    def test_groups_partition_seeds(self, make_config):
        result = ensemble_g0(make_config(), SMALL_DATA, n_runs=12)
        groups = filter_initializations(result)
        members = groups.neutral + groups.weak_prejudice + groups.deep_prejudice
        assert sorted(members) == list(result.seeds)
        assert sum(groups.census().values()) == 12


class TestNormEquivalence:
    def test_ln_and_rms_gap_tracks_layer_mean(self, gaussian_inputs):
        config = NetworkConfig(
            input_dim=8,
            hidden_widths=(64, 64),
            norm_kind=NormKind.LAYER,
            placement=NormPlacement.PRE_ACTIVATION,
        )
        report = ln_rms_gap(init_network(config, 0), gaussian_inputs)
        assert len(report.max_abs_difference) == 2
        assert all(d > 0 for d in report.max_abs_difference)
        assert all(m > 0 for m in report.max_abs_layer_mean)


class TestAcceptance:
    @pytest.mark.slow
    @pytest.mark.parametrize("kind", [NormKind.BATCH, NormKind.LAYER])
    @pytest.mark.parametrize("depth", [1, 20])
    def test_post_activation_neutrality(self, kind, depth):
        config = NetworkConfig(
            input_dim=100,
            hidden_widths=(500,) * depth,
            norm_kind=kind,
            placement=NormPlacement.POST_ACTIVATION,
        )
        result = ensemble_g0(config, DataSpec(n=2_000), n_runs=200, threads=4)
        samples = np.asarray(result.samples)
        assert samples.min() >= 0.4 and samples.max() <= 0.6

    @pytest.mark.slow
    def test_post_activation_spread_shrinks_with_width(self):
        spec = DataSpec(n=20_000)

        def spread(width: int) -> float:
            config = NetworkConfig(
                input_dim=100,
                hidden_widths=(width,),
                norm_kind=NormKind.BATCH,
                placement=NormPlacement.POST_ACTIVATION,
            )
            samples = np.asarray(ensemble_g0(config, spec, n_runs=200, threads=2).samples)
            return float(np.mean(np.abs(samples - 0.5)))

        assert spread(1_000) < spread(100)

    @pytest.mark.slow
    def test_bn_pre_depth_stability(self):
        spec = DataSpec(n=1_000)
        shallow = mlp_a(NormKind.BATCH, NormPlacement.PRE_ACTIVATION, input_dim=100)
        deep = mlp_b(NormKind.BATCH, NormPlacement.PRE_ACTIVATION, input_dim=100)
        a = ensemble_g0(shallow, spec, n_runs=1000, threads=4)
        b = ensemble_g0(deep, spec, n_runs=1000, threads=4)
        assert ks_distance(a.samples, b.samples) < 0.1

    @pytest.mark.slow
    def test_ln_pre_prejudice_grows_with_depth(self):
        spec = DataSpec(n=1_000)

        def prejudiced_fraction(config: NetworkConfig) -> float:
            samples = np.asarray(ensemble_g0(config, spec, n_runs=500, threads=4).samples)
            return float(np.mean(np.maximum(samples, 1 - samples) > 0.9))

        shallow = mlp_a(NormKind.LAYER, NormPlacement.PRE_ACTIVATION, input_dim=100)
        deep = mlp_b(NormKind.LAYER, NormPlacement.PRE_ACTIVATION, input_dim=100)
        assert prejudiced_fraction(deep) >= 2 * prejudiced_fraction(shallow)
