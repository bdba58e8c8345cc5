"""
Tests for the denoising U-net
"""

import numpy as np
import pytest

from src.components.denoiser_network import DenoiserNetwork
from src.primitives.checkpoint_codec import Checkpoint
from src.primitives.errors import ShapeMismatchError
from src.primitives.tensor import Tensor


def small(**overrides):
    options = dict(latent_channels=1, channels=4, time_embed_dim=8, norm_groups=2, seed=11)
    options.update(overrides)
    return DenoiserNetwork(**options)


class TestDenoiserNetwork:
    def test_output_matches_input_shape(self):
        net = small()
        x = np.random.default_rng(0).standard_normal((3, 1, 4, 4))
        assert net.predict_noise(x, np.array([1, 50, 999])).shape == (3, 1, 4, 4)

    def test_downsampling_variant(self):
        net = small(downsample=True)
        x = np.random.default_rng(1).standard_normal((2, 1, 4, 4))
        assert net.predict_noise(x, np.array([3, 4])).shape == (2, 1, 4, 4)

    def test_odd_latent_rejected_when_downsampling(self):
        with pytest.raises(ShapeMismatchError):
            small(downsample=True).predict_noise(np.zeros((1, 1, 3, 3)), np.array([1]))

    def test_timestep_count_must_match_batch(self):
        with pytest.raises(ShapeMismatchError):
            small().predict_noise(np.zeros((2, 1, 4, 4)), np.array([1]))

    def test_channel_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            small().predict_noise(np.zeros((1, 2, 4, 4)), np.array([1]))

    def test_output_depends_on_timestep(self):
        """Only t changes; the prediction changes"""
        net = small()
        for tensor in net.parameters().values():
            tensor.data = tensor.data + np.random.default_rng(5).normal(0, 0.1, tensor.shape).astype(np.float32)
        x = np.random.default_rng(2).standard_normal((1, 1, 4, 4))
        assert not np.allclose(net.predict_noise(x, np.array([10])), net.predict_noise(x, np.array([900])))

    def test_checkpoint_round_trip(self):
        net = small()
        ckpt = Checkpoint(params=net.prefixed_state(), metadata={"denoiser": net.architecture()})
        restored = DenoiserNetwork.from_checkpoint(ckpt)
        x = np.random.default_rng(3).standard_normal((1, 1, 4, 4))
        t = np.array([17])
        np.testing.assert_array_equal(restored.predict_noise(x, t), net.predict_noise(x, t))

    def test_forward_builds_graph(self):
        net = small()
        out = net(Tensor(np.ones((1, 1, 2, 2), dtype=np.float32)), np.array([5]))
        out.sum().backward()
        assert net.conv_in.weight.grad is not None
