# tests/test_network.py
import numpy as np
import pytest
from pydantic import ValidationError

from common.api_error import (
    ConfigurationError,
    EmptyBatchError,
    NonFiniteError,
    ShapeMismatchError,
)
from app.core import (
    batch_norm,
    forward,
    forward_minibatched,
    init_network,
    layer_norm,
    mlp_a,
    mlp_b,
    permute_hidden,
    predict,
    relu,
)
from app.schemas import ForwardMode, NetworkConfig, NormKind, NormPlacement


class TestNetworkConfig:
    def test_depth_width_shorthand(self):
        config = NetworkConfig(input_dim=4, depth=3, width=7)
        assert config.hidden_widths == (7, 7, 7)
        assert config.layer_widths == (4, 7, 7, 7, 2)

    def test_placement_must_match_norm_kind(self):
        with pytest.raises(ValidationError):
            NetworkConfig(input_dim=4, hidden_widths=(3,), placement=NormPlacement.PRE_ACTIVATION)
        with pytest.raises(ValidationError):
            NetworkConfig(input_dim=4, hidden_widths=(3,), norm_kind=NormKind.LAYER)

    def test_loo_requires_batch_norm(self):
        with pytest.raises(ValidationError):
            NetworkConfig(
                input_dim=4,
                hidden_widths=(3,),
                norm_kind=NormKind.LAYER,
                placement=NormPlacement.POST_ACTIVATION,
                loo_estimators=True,
            )

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            NetworkConfig(input_dim=4, hidden_widths=(3,), dropout=0.1)

    def test_presets(self):
        a = mlp_a(NormKind.BATCH, NormPlacement.PRE_ACTIVATION)
        b = mlp_b(NormKind.LAYER, NormPlacement.POST_ACTIVATION)
        assert a.layer_widths == (1000, 100, 2)
        assert b.depth == 20 and b.input_dim == 1000
        assert a.label() == "batch_relu_L1"
        assert b.label() == "relu_layer_L20"


class TestInit:
    def test_kaiming_variance(self):
        config = NetworkConfig(input_dim=500, hidden_widths=(400,), sigma_w2=2.0)
        net = init_network(config, seed=0)
        assert net.weights[0].shape == (400, 500)
        assert net.weights[1].shape == (2, 400)
        assert np.var(net.weights[0]) == pytest.approx(2.0 / 500, rel=0.02)
        assert all(np.all(b == 0) for b in net.biases)

    def test_norm_parameters(self, make_config):
        net = init_network(make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION), seed=1)
        assert len(net.norm_scale) == 1
        np.testing.assert_array_equal(net.norm_scale[0], 1.0)
        np.testing.assert_array_equal(net.norm_shift[0], 0.0)
        assert init_network(make_config(), seed=1).norm_scale == ()

    def test_same_seed_same_weights(self, make_config):
        a = init_network(make_config(), seed=9)
        b = init_network(make_config(), seed=9)
        c = init_network(make_config(), seed=10)
        np.testing.assert_array_equal(a.weights[0], b.weights[0])
        assert not np.array_equal(a.weights[0], c.weights[0])

    def test_arrays_read_only(self, small_net):
        assert not small_net.weights[0].flags.writeable
        with pytest.raises(ValueError):
            small_net.weights[0][0, 0] = 1.0


class TestForward:
    def test_plain_relu_matches_manual(self, small_net, gaussian_inputs):
        x = gaussian_inputs.inputs
        g = relu(x @ small_net.weights[0].T + small_net.biases[0])
        expected = g @ small_net.weights[1].T + small_net.biases[1]
        trace = forward(small_net, gaussian_inputs)
        np.testing.assert_allclose(trace.outputs, expected, rtol=1e-12)
        assert len(trace.layers) == 1

    def test_pre_and_post_placement(self, make_config, gaussian_inputs):
        x = gaussian_inputs.inputs
        pre = init_network(make_config(NormKind.LAYER, NormPlacement.PRE_ACTIVATION), seed=2)
        post = init_network(make_config(NormKind.LAYER, NormPlacement.POST_ACTIVATION), seed=2)
        h = x @ pre.weights[0].T
        g_pre = relu(layer_norm(h)[0])
        g_post = layer_norm(relu(h))[0]
        np.testing.assert_allclose(forward(pre, x).last_hidden, g_pre, atol=1e-12)
        np.testing.assert_allclose(forward(post, x).last_hidden, g_post, atol=1e-12)

    def test_post_batch_norm_centers_hidden_nodes(self, make_config, gaussian_inputs):
        net = init_network(make_config(NormKind.BATCH, NormPlacement.POST_ACTIVATION), seed=4)
        trace = forward(net, gaussian_inputs, ForwardMode.FULL_BATCH)
        np.testing.assert_allclose(trace.last_hidden.mean(axis=0), 0.0, atol=1e-12)

    def test_minibatch_size_enforced_in_train_mode(self, make_config, gaussian_inputs):
        config = make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION, bn_batch_size=16)
        net = init_network(config, seed=0)
        with pytest.raises(ShapeMismatchError):
            forward(net, gaussian_inputs.inputs[:10], ForwardMode.TRAIN)
        # full-batch mode skips the check
        forward(net, gaussian_inputs.inputs[:10], ForwardMode.FULL_BATCH)

    def test_eval_needs_running_stats(self, make_config, gaussian_inputs):
        net = init_network(make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION), seed=0)
        with pytest.raises(ConfigurationError):
            forward(net, gaussian_inputs, ForwardMode.EVAL)

    def test_eval_uses_running_stats(self, make_config, gaussian_inputs):
        net = init_network(make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION), seed=0)
        x = gaussian_inputs.inputs
        h = x @ net.weights[0].T
        net = net.with_parameters(running_mean=[h.mean(axis=0)], running_var=[h.var(axis=0)])
        np.testing.assert_allclose(
            forward(net, x, ForwardMode.EVAL).outputs,
            forward(net, x, ForwardMode.FULL_BATCH).outputs,
            rtol=1e-10,
        )

    def test_bad_batches(self, small_net):
        with pytest.raises(EmptyBatchError):
            forward(small_net, np.zeros((0, 8)))
        with pytest.raises(ShapeMismatchError):
            forward(small_net, np.zeros((3, 7)))
        bad = np.ones((3, 8))
        bad[1, 2] = np.nan
        with pytest.raises(NonFiniteError):
            forward(small_net, bad)

    def test_batch_norm_train_mode_uses_batch_statistics(self, make_config, rng):
        net = init_network(make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION), seed=6)
        x = rng.standard_normal((12, 8))
        trace = forward(net, x, ForwardMode.TRAIN)
        expected, _ = batch_norm(x @ net.weights[0].T)
        np.testing.assert_allclose(trace.layers[0].norm_hat, expected, atol=1e-12)


class TestPredict:
    def test_ties_go_to_lowest_index(self):
        np.testing.assert_array_equal(predict(np.array([[1.0, 1.0], [0.0, 2.0]])), [0, 1])

    def test_needs_two_columns(self):
        with pytest.raises(ShapeMismatchError):
            predict(np.zeros((3, 1)))


class TestMinibatched:
    def test_partial_block_dropped(self, make_config, rng):
        net = init_network(make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION), seed=1)
        x = rng.standard_normal((10, 8))
        outputs, kept, dropped = forward_minibatched(net, x, seed=3, batch_size=4)
        assert outputs.shape == (8, 2)
        assert dropped == 2
        assert len(set(kept.tolist())) == 8
        np.testing.assert_allclose(outputs[:4], forward(net, x[kept[:4]]).outputs, rtol=1e-12)

    def test_needs_a_batch_size(self, make_config, rng):
        net = init_network(make_config(NormKind.BATCH, NormPlacement.PRE_ACTIVATION), seed=1)
        with pytest.raises(ConfigurationError):
            forward_minibatched(net, rng.standard_normal((10, 8)), seed=0)


class TestPermuteHidden:
    @pytest.mark.parametrize(
        "kind,placement",
        [
            (NormKind.NONE, NormPlacement.ABSENT),
            (NormKind.BATCH, NormPlacement.PRE_ACTIVATION),
            (NormKind.LAYER, NormPlacement.POST_ACTIVATION),
        ],
    )
    def test_outputs_unchanged(self, make_config, gaussian_inputs, kind, placement):
        net = init_network(make_config(kind, placement), seed=8)
        order = np.random.default_rng(0).permutation(16)
        permuted = permute_hidden(net, 0, order)
        np.testing.assert_allclose(
            forward(permuted, gaussian_inputs, ForwardMode.FULL_BATCH).outputs,
            forward(net, gaussian_inputs, ForwardMode.FULL_BATCH).outputs,
            rtol=1e-10,
            atol=1e-12,
        )
