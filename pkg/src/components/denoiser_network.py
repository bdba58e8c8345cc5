"""
DenoiserNetwork Component

Small U-net predicting the injected noise from a noisy latent and its timestep.

Composes:
- Layers (component): Conv2d, Linear, ResBlock, AttentionBlock, Downsample, Upsample
- Tensor, nn_ops (primitive)

Layout (c = base channels):
    conv_in -> down1 Res(c) [skip1] -> (Downsample) -> down2 Res(2c) [skip2]
    -> mid Res(2c), Attention(2c), Res(2c)
    -> up1 Res(cat skip2 -> 2c) -> (Upsample) -> up2 Res(cat skip1 -> c)
    -> GroupNorm, SiLU, conv_out
The sinusoidal timestep embedding passes through Linear-SiLU-Linear and is
added inside every residual block. Down/upsampling is optional so that
attention can run at the full latent resolution.
"""

from math import gcd

import numpy as np

from src.components.layers import (
    AttentionBlock,
    Conv2d,
    Downsample,
    GroupNorm,
    Linear,
    Module,
    ResBlock,
    Upsample,
    sinusoidal_embedding,
)
from src.primitives import nn_ops
from src.primitives.checkpoint_codec import Checkpoint
from src.primitives.errors import CheckpointFormatError, ShapeMismatchError
from src.primitives.seed_splitter import SeedSplitter
from src.primitives.tensor import Tensor, no_grad


class DenoiserNetwork(Module):
    """Noise predictor eps_theta(x_t, t)"""

    CHECKPOINT_PREFIX = "denoiser"

    def __init__(
        self,
        latent_channels: int = 1,
        channels: int = 32,
        time_embed_dim: int = 64,
        norm_groups: int = 4,
        downsample: bool = False,
        seed: int = 0,
    ):
        rng = SeedSplitter.generator(seed, 2)
        c = int(channels)
        self.latent_channels = int(latent_channels)
        self.channels = c
        self.time_embed_dim = int(time_embed_dim)
        self.norm_groups = int(norm_groups)
        self.use_downsample = bool(downsample)

        self.time_in = Linear(self.time_embed_dim, self.time_embed_dim, rng)
        self.time_out = Linear(self.time_embed_dim, self.time_embed_dim, rng)
        tdim = self.time_embed_dim

        self.conv_in = Conv2d(self.latent_channels, c, 3, rng)
        self.down1 = ResBlock(c, c, norm_groups, rng, tdim)
        self.down_sample = Downsample(c, rng) if self.use_downsample else None
        self.down2 = ResBlock(c, 2 * c, norm_groups, rng, tdim)
        self.mid1 = ResBlock(2 * c, 2 * c, norm_groups, rng, tdim)
        self.mid_attn = AttentionBlock(2 * c, norm_groups, rng)
        self.mid2 = ResBlock(2 * c, 2 * c, norm_groups, rng, tdim)
        self.up1 = ResBlock(4 * c, 2 * c, norm_groups, rng, tdim)
        self.up_sample = Upsample(2 * c, rng) if self.use_downsample else None
        self.up2 = ResBlock(3 * c, c, norm_groups, rng, tdim)
        self.norm_out = GroupNorm(c, gcd(norm_groups, c))
        self.conv_out = Conv2d(c, self.latent_channels, 3, rng)

    def architecture(self) -> dict:
        return {
            "latent_channels": self.latent_channels,
            "channels": self.channels,
            "time_embed_dim": self.time_embed_dim,
            "norm_groups": self.norm_groups,
            "downsample": self.use_downsample,
        }

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "DenoiserNetwork":
        if cls.CHECKPOINT_PREFIX not in checkpoint.metadata:
            raise CheckpointFormatError(f"checkpoint has no {cls.CHECKPOINT_PREFIX} architecture")
        network = cls(**checkpoint.metadata[cls.CHECKPOINT_PREFIX])
        network.load_state(checkpoint.subset(cls.CHECKPOINT_PREFIX))
        return network

    def prefixed_state(self) -> dict[str, np.ndarray]:
        return {f"{self.CHECKPOINT_PREFIX}.{k}": v for k, v in self.state().items()}

    def time_embedding(self, t: np.ndarray) -> Tensor:
        base = Tensor(sinusoidal_embedding(t, self.time_embed_dim))
        return self.time_out(nn_ops.silu(self.time_in(base)))

    def forward(self, x: Tensor, t: np.ndarray) -> Tensor:
        """
        Predict noise.

        Args:
            x: (N, latent_channels, h, w) noisy latents
            t: (N,) integer timesteps

        Returns:
            Tensor: Same shape as x

        Raises:
            ShapeMismatchError: On channel mismatch, odd extent with downsampling,
                or a timestep count different from the batch size
        """
        if x.ndim != 4 or x.shape[1] != self.latent_channels:
            raise ShapeMismatchError(
                f"denoiser input must be (N, {self.latent_channels}, h, w), got {x.shape}"
            )
        if self.use_downsample and (x.shape[2] % 2 or x.shape[3] % 2):
            raise ShapeMismatchError(f"latent {x.shape[2]}x{x.shape[3]} must be even to downsample")
        t = np.asarray(t).reshape(-1)
        if t.size != x.shape[0]:
            raise ShapeMismatchError(f"{t.size} timesteps for a batch of {x.shape[0]}")

        temb = self.time_embedding(t)
        h = self.conv_in(x)
        skip1 = self.down1(h, temb)
        h = self.down_sample(skip1) if self.down_sample is not None else skip1
        skip2 = self.down2(h, temb)
        h = self.mid1(skip2, temb)
        h = self.mid_attn(h)
        h = self.mid2(h, temb)
        h = self.up1(nn_ops.concat([h, skip2]), temb)
        if self.up_sample is not None:
            h = self.up_sample(h)
        h = self.up2(nn_ops.concat([h, skip1]), temb)
        return self.conv_out(nn_ops.silu(self.norm_out(h)))

    def predict_noise(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Inference-only forward on numpy arrays."""
        with no_grad():
            return self.forward(Tensor(np.asarray(x, dtype=np.float32)), t).data
