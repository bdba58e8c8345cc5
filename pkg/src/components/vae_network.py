"""
VaeNetwork Component

Convolutional VAE mapping continuous facies grids (N, 1, Ny, Nx) to latent
fields (N, latent_channels, Ny/8, Nx/8) and back.

Composes:
- Layers (component): Conv2d, ResBlock, Downsample, Upsample, GroupNorm
- Tensor, nn_ops (primitive)
- Checkpoint (primitive)

Encoder: conv, then four residual blocks alternated with three stride-2
convolutions, then GroupNorm, SiLU and a conv producing mean and log-variance.
The decoder mirrors it with nearest-neighbour upsampling. log-variance is
clamped to [-30, 20]; decode() clamps its output to the code range [-1, 1].
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.components.layers import Conv2d, Downsample, GroupNorm, Module, ResBlock, Upsample
from src.primitives import nn_ops
from src.primitives.checkpoint_codec import Checkpoint
from src.primitives.errors import CheckpointFormatError, ShapeMismatchError
from src.primitives.facies import ConditioningSet
from src.primitives.seed_splitter import SeedSplitter
from src.primitives.tensor import Tensor, no_grad

DOWNSAMPLING_RATIO = 8
LOGVAR_RANGE = (-30.0, 20.0)


@dataclass(frozen=True)
class LatentDistribution:
    """Per-cell Gaussian N(mu, exp(log_var)); log_var = -inf encodes sigma = 0"""

    mu: np.ndarray
    log_var: np.ndarray

    def __post_init__(self):
        if np.shape(self.mu) != np.shape(self.log_var):
            raise ShapeMismatchError(
                f"mu {np.shape(self.mu)} and log_var {np.shape(self.log_var)} differ"
            )
        log_var = np.asarray(self.log_var)
        if np.isnan(log_var).any() or np.isposinf(log_var).any():
            raise ShapeMismatchError("log_var must not contain NaN or +inf")

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(0.5 * np.asarray(self.log_var))


@dataclass(frozen=True)
class VaeLossReport:
    recon: float
    kl: float
    hard: float
    total: float
    lambda_kl: float
    lambda_h: float

    def as_row(self) -> list[float]:
        return [self.recon, self.kl, self.hard, self.total]


class VaeEncoder(Module):
    def __init__(self, channels: Sequence[int], latent_channels: int, groups: int, rng):
        c1, c2, c3 = channels
        self.conv_in = Conv2d(1, c1, 3, rng)
        self.res1 = ResBlock(c1, c1, groups, rng)
        self.down1 = Downsample(c1, rng, c2)
        self.res2 = ResBlock(c2, c2, groups, rng)
        self.down2 = Downsample(c2, rng, c3)
        self.res3 = ResBlock(c3, c3, groups, rng)
        self.down3 = Downsample(c3, rng)
        self.res4 = ResBlock(c3, c3, groups, rng)
        self.norm_out = GroupNorm(c3, np.gcd(groups, c3))
        self.conv_out = Conv2d(c3, 2 * latent_channels, 3, rng)
        self.latent_channels = latent_channels

    def forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        h = self.conv_in(x)
        h = self.down1(self.res1(h))
        h = self.down2(self.res2(h))
        h = self.down3(self.res3(h))
        h = self.res4(h)
        h = self.conv_out(nn_ops.silu(self.norm_out(h)))
        lc = self.latent_channels
        mu = h[:, :lc]
        log_var = nn_ops.clip(h[:, lc:], *LOGVAR_RANGE)
        return mu, log_var


class VaeDecoder(Module):
    def __init__(self, channels: Sequence[int], latent_channels: int, groups: int, rng):
        c1, c2, c3 = channels
        self.conv_in = Conv2d(latent_channels, c3, 3, rng)
        self.res1 = ResBlock(c3, c3, groups, rng)
        self.up1 = Upsample(c3, rng)
        self.res2 = ResBlock(c3, c3, groups, rng)
        self.up2 = Upsample(c3, rng, c2)
        self.res3 = ResBlock(c2, c2, groups, rng)
        self.up3 = Upsample(c2, rng, c1)
        self.res4 = ResBlock(c1, c1, groups, rng)
        self.norm_out = GroupNorm(c1, np.gcd(groups, c1))
        self.conv_out = Conv2d(c1, 1, 3, rng)

    def forward(self, z: Tensor) -> Tensor:
        h = self.conv_in(z)
        h = self.up1(self.res1(h))
        h = self.up2(self.res2(h))
        h = self.up3(self.res3(h))
        h = self.res4(h)
        return self.conv_out(nn_ops.silu(self.norm_out(h)))


class VaeNetwork(Module):
    """Encoder/decoder pair with numpy-facing inference helpers"""

    CHECKPOINT_PREFIX = "vae"

    def __init__(
        self,
        channels: Sequence[int] = (8, 16, 32),
        latent_channels: int = 1,
        norm_groups: int = 4,
        seed: int = 0,
    ):
        rng = SeedSplitter.generator(seed, 1)
        self.channels = tuple(int(c) for c in channels)
        self.latent_channels = int(latent_channels)
        self.norm_groups = int(norm_groups)
        self.encoder = VaeEncoder(self.channels, self.latent_channels, self.norm_groups, rng)
        self.decoder = VaeDecoder(self.channels, self.latent_channels, self.norm_groups, rng)

    def architecture(self) -> dict:
        return {
            "channels": list(self.channels),
            "latent_channels": self.latent_channels,
            "norm_groups": self.norm_groups,
        }

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "VaeNetwork":
        if cls.CHECKPOINT_PREFIX not in checkpoint.metadata:
            raise CheckpointFormatError(f"checkpoint has no {cls.CHECKPOINT_PREFIX} architecture")
        network = cls(**checkpoint.metadata[cls.CHECKPOINT_PREFIX])
        network.load_state(checkpoint.subset(cls.CHECKPOINT_PREFIX))
        return network

    def prefixed_state(self) -> dict[str, np.ndarray]:
        return {f"{self.CHECKPOINT_PREFIX}.{k}": v for k, v in self.state().items()}

    @staticmethod
    def _check_grid(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float32)
        if x.ndim == 2:
            x = x[None, None]
        elif x.ndim == 3:
            x = x[:, None]
        if x.ndim != 4 or x.shape[1] != 1:
            raise ShapeMismatchError(f"VAE input must be (N, 1, Ny, Nx), got {x.shape}")
        if x.shape[2] % DOWNSAMPLING_RATIO or x.shape[3] % DOWNSAMPLING_RATIO:
            raise ShapeMismatchError(
                f"grid {x.shape[2]}x{x.shape[3]} is not divisible by {DOWNSAMPLING_RATIO}"
            )
        return x

    def encode_tensor(self, m: Tensor) -> tuple[Tensor, Tensor]:
        return self.encoder(m)

    def decode_tensor(self, z: Tensor) -> Tensor:
        return self.decoder(z)

    def encode(self, m: np.ndarray) -> LatentDistribution:
        """
        Latent mean and log-variance of continuous facies grids.

        Args:
            m: (Ny, Nx), (N, Ny, Nx) or (N, 1, Ny, Nx) continuous codes

        Returns:
            LatentDistribution with (N, latent_channels, Ny/8, Nx/8) arrays

        Raises:
            ShapeMismatchError: If the grid is not divisible by 8
        """
        x = self._check_grid(m)
        with no_grad():
            mu, log_var = self.encoder(Tensor(x))
        return LatentDistribution(mu.data.copy(), log_var.data.copy())

    def decode(self, xi: np.ndarray) -> np.ndarray:
        """
        Continuous facies (N, 1, Ny, Nx) clamped to [-1, 1].

        Raises:
            ShapeMismatchError: If the latent channel count differs from the network's
        """
        z = np.asarray(xi, dtype=np.float32)
        if z.ndim == 3:
            z = z[None]
        if z.ndim != 4 or z.shape[1] != self.latent_channels:
            raise ShapeMismatchError(
                f"latent must be (N, {self.latent_channels}, h, w), got {np.shape(xi)}"
            )
        with no_grad():
            out = self.decoder(Tensor(z))
        return np.clip(out.data, -1.0, 1.0)


def sample_latent(dist: LatentDistribution, seed: int) -> np.ndarray:
    """xi = mu + sigma * z with z ~ N(0, I) drawn from seed."""
    z = SeedSplitter.generator(seed).standard_normal(np.shape(dist.mu))
    mu = np.asarray(dist.mu)
    return (mu + dist.sigma * z).astype(np.result_type(mu.dtype, np.float32))


def vae_loss_tensors(
    m: np.ndarray,
    m_hat: Tensor,
    mu: Tensor,
    log_var: Tensor,
    mask: np.ndarray,
    n_hard: int,
) -> tuple[Tensor, Tensor, Tensor]:
    """
    Differentiable (recon, kl, hard), each averaged over the batch axis.

    recon = ||m - m_hat||^2, kl = 0.5 * sum(mu^2 + e^lv - 1 - lv),
    hard = ||mask * (m - m_hat)||^2 / n_hard (0 when there is no hard data).
    """
    batch = m_hat.shape[0] if m_hat.ndim == 4 else 1
    diff = Tensor(np.asarray(m, dtype=m_hat.dtype)) - m_hat
    recon = diff.square().sum() * (1.0 / batch)
    kl = ((mu.square() + log_var.exp() - 1.0 - log_var).sum()) * (0.5 / batch)
    if n_hard > 0:
        hard = (diff * Tensor(np.asarray(mask, dtype=m_hat.dtype))).square().sum() * (1.0 / (n_hard * batch))
    else:
        hard = Tensor(np.zeros((), dtype=m_hat.dtype))
    return recon, kl, hard


def vae_loss(
    m: np.ndarray,
    m_hat: np.ndarray,
    dist: LatentDistribution,
    cond: ConditioningSet,
    lambda_kl: float = 1e-6,
    lambda_h: float = 10.0,
) -> VaeLossReport:
    """
    Evaluate the weighted VAE objective.

    Args:
        m: True continuous grid(s), (Ny, Nx) or batched
        m_hat: Reconstruction, same shape as m
        dist: Encoder distribution
        cond: Hard data used by the hard-data term

    Returns:
        VaeLossReport with total = recon + lambda_kl * kl + lambda_h * hard

    Raises:
        ShapeMismatchError: If m and m_hat differ in shape
    """
    m = np.asarray(m, dtype=np.float64)
    m_hat = np.asarray(m_hat, dtype=np.float64)
    if m.shape != m_hat.shape:
        raise ShapeMismatchError(f"m {m.shape} and m_hat {m_hat.shape} differ")
    ny, nx = m.shape[-2:]
    mask = cond.mask(nx, ny)
    lv = np.asarray(dist.log_var, dtype=np.float64)
    mu = np.asarray(dist.mu, dtype=np.float64)
    batch = m.shape[0] if m.ndim == 4 else 1

    recon = float(np.sum((m - m_hat) ** 2) / batch)
    kl = float(0.5 * np.sum(mu ** 2 + np.exp(lv) - 1.0 - lv) / batch)
    hard = float(np.sum((mask * (m - m_hat)) ** 2) / (len(cond) * batch)) if len(cond) else 0.0
    total = recon + lambda_kl * kl + lambda_h * hard
    return VaeLossReport(recon, kl, hard, total, lambda_kl, lambda_h)


def build_report(recon: float, kl: float, hard: float, lambda_kl: float, lambda_h: float) -> VaeLossReport:
    return VaeLossReport(recon, kl, hard, recon + lambda_kl * kl + lambda_h * hard, lambda_kl, lambda_h)

