"""
GeomodelSampling Feature

Generates facies grids from a trained latent diffusion checkpoint and measures
how smoothly models change along a latent interpolation.

Composes:
- VaeNetwork, DenoiserNetwork (component)
- NoiseScheduler: ddim_sample, ddpm_sample, interpolate_latents (component)
- SpatialStatistics: consecutive_ssim, anchored_ssim (component)
- Checkpoint, FaciesGrid, SeedSplitter (primitive)

DDIM generation is a pure function of (checkpoint, xi_T, n_steps). Starting
noise xi_T is drawn per sample from its own stream, either N(0, I) or
N(E_mu, E_sigma^2) of a randomly chosen training realization.

Interface:
- LatentDiffusionModel.from_checkpoint(ckpt) → LatentDiffusionModel
- generate(model, xi_T, n_steps, sampler="ddim", seed=0) → FaciesGrid | list[FaciesGrid]
- draw_start_latents(model, count, seed, source="normal", grids=None) → np.ndarray
- sample_geomodels(model, count, seed, n_steps, ...) → list[FaciesGrid]
- interpolation_stability(model, xi1, xi2, step, n_steps) → InterpolationReport
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from src.components.denoiser_network import DenoiserNetwork
from src.components.noise_scheduler import SchedulerTable, ddim_sample, ddpm_sample, interpolate_latents
from src.components.spatial_statistics import anchored_ssim, consecutive_ssim
from src.components.vae_network import LatentDistribution, VaeNetwork, sample_latent
from src.features.ldm_training import schedule_from_checkpoint
from src.primitives.checkpoint_codec import Checkpoint
from src.primitives.dataset_codec import stack_continuous
from src.primitives.errors import InterpolationRangeError, ShapeMismatchError
from src.primitives.facies import FaciesGrid
from src.primitives.seed_splitter import SeedSplitter

XI_NORMAL, XI_ENCODER = "normal", "encoder"
SAMPLER_DDIM, SAMPLER_DDPM = "ddim", "ddpm"
CHUNK = 32


@dataclass
class LatentDiffusionModel:
    vae: VaeNetwork
    denoiser: DenoiserNetwork
    schedule: SchedulerTable
    grid_shape: tuple[int, int]

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "LatentDiffusionModel":
        ny, nx = checkpoint.metadata.get("grid", (0, 0))
        return cls(
            VaeNetwork.from_checkpoint(checkpoint),
            DenoiserNetwork.from_checkpoint(checkpoint),
            schedule_from_checkpoint(checkpoint),
            (int(ny), int(nx)),
        )

    @property
    def latent_shape(self) -> tuple[int, int, int]:
        ny, nx = self.grid_shape
        return (self.vae.latent_channels, ny // 8, nx // 8)

    @property
    def latent_size(self) -> int:
        return int(np.prod(self.latent_shape))

    def decode_facies(self, xi0: np.ndarray) -> list[FaciesGrid]:
        decoded = self.vae.decode(xi0)
        return [FaciesGrid.from_continuous(d[0]) for d in decoded]


def _check_latents(model: LatentDiffusionModel, xi_T: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi_T, dtype=np.float32)
    if xi.ndim == 3:
        xi = xi[None]
    if xi.ndim != 4 or xi.shape[1:] != model.latent_shape:
        raise ShapeMismatchError(f"starting latent {np.shape(xi_T)} does not match {model.latent_shape}")
    return xi


def denoise(
    model: LatentDiffusionModel,
    xi_T: np.ndarray,
    n_steps: int,
    sampler: str = SAMPLER_DDIM,
    seed: int = 0,
) -> np.ndarray:
    """Clean latents xi_0 for a batch of starting latents."""
    xi = _check_latents(model, xi_T)
    out = []
    for k, start in enumerate(range(0, len(xi), CHUNK)):
        chunk = xi[start:start + CHUNK]
        if sampler == SAMPLER_DDPM:
            out.append(ddpm_sample(chunk, model.denoiser.predict_noise, model.schedule, SeedSplitter.hash_seed(seed, f"ddpm-{k}")))
        elif sampler == SAMPLER_DDIM:
            out.append(ddim_sample(chunk, model.denoiser.predict_noise, model.schedule, n_steps))
        else:
            raise ValueError(f"unknown sampler {sampler!r}")
    return np.concatenate(out)


def generate(
    model: Union[LatentDiffusionModel, Checkpoint],
    xi_T: np.ndarray,
    n_steps: int,
    sampler: str = SAMPLER_DDIM,
    seed: int = 0,
) -> Union[FaciesGrid, list[FaciesGrid]]:
    """
    Denoise, decode and discretize.

    Args:
        model: Loaded model or an LDM checkpoint
        xi_T: (C, h, w) for one grid or (N, C, h, w) for several
        n_steps: DDIM steps (ignored by the DDPM sampler)
        sampler: "ddim" (deterministic) or "ddpm" (ancestral, uses seed)

    Returns:
        FaciesGrid for unbatched input, otherwise a list

    Raises:
        ShapeMismatchError: If xi_T does not match the latent shape
    """
    if isinstance(model, Checkpoint):
        model = LatentDiffusionModel.from_checkpoint(model)
    grids = model.decode_facies(denoise(model, xi_T, n_steps, sampler, seed))
    return grids[0] if np.ndim(xi_T) == 3 else grids


def draw_start_latents(
    model: LatentDiffusionModel,
    count: int,
    seed: int,
    source: str = XI_NORMAL,
    grids: Optional[Sequence[FaciesGrid]] = None,
) -> np.ndarray:
    """
    Starting latents, sample k from its own stream (seed, k).

    Raises:
        ValueError: If source is "encoder" and no grids are given, or source is unknown
    """
    shape = model.latent_shape
    if source == XI_NORMAL:
        return np.stack([SeedSplitter.generator(seed, k).standard_normal(shape) for k in range(count)]).astype(np.float32)
    if source != XI_ENCODER:
        raise ValueError(f"unknown latent source {source!r}")
    if not grids:
        raise ValueError("encoder latent source needs training realizations")
    dist = model.vae.encode(stack_continuous(grids))
    picks = SeedSplitter.generator(seed, 1 << 20).integers(0, len(grids), size=count)
    out = []
    for k, p in enumerate(picks):
        one = LatentDistribution(dist.mu[p], dist.log_var[p])
        out.append(sample_latent(one, SeedSplitter.hash_seed(seed, f"xi-{k}")))
    return np.stack(out).astype(np.float32)


def sample_geomodels(
    model: LatentDiffusionModel,
    count: int,
    seed: int,
    n_steps: int,
    source: str = XI_NORMAL,
    grids: Optional[Sequence[FaciesGrid]] = None,
    sampler: str = SAMPLER_DDIM,
) -> list[FaciesGrid]:
    xi_T = draw_start_latents(model, count, seed, source, grids)
    return generate(model, xi_T, n_steps, sampler, seed)


@dataclass(frozen=True)
class InterpolationReport:
    deltas: np.ndarray
    consecutive: np.ndarray
    anchored: np.ndarray
    grids: list[FaciesGrid]

    def summary(self) -> dict:
        return {
            "step": float(self.deltas[1] - self.deltas[0]) if len(self.deltas) > 1 else 0.0,
            "consecutive_mean": float(np.mean(self.consecutive)) if self.consecutive.size else 1.0,
            "anchored_last": float(self.anchored[-1]),
        }


def interpolation_deltas(step: float) -> np.ndarray:
    if not 0.0 < step < 1.0:
        raise InterpolationRangeError(f"interpolation step {step} must lie in (0, 1)")
    count = int(np.floor(1.0 / step + 1e-9))
    deltas = np.arange(count + 1) * step
    if deltas[-1] < 1.0 - 1e-9:
        deltas = np.append(deltas, 1.0)
    return np.minimum(deltas, 1.0)


def interpolation_stability(
    model: LatentDiffusionModel,
    xi1: np.ndarray,
    xi2: np.ndarray,
    step: float,
    n_steps: int,
) -> InterpolationReport:
    """
    Generate models along xi1 (1 - delta) + xi2 delta for delta = 0, step, ..., 1.

    Returns:
        InterpolationReport with SSIM between consecutive models and between the
        first model and every model

    Raises:
        InterpolationRangeError: Unless 0 < step < 1
    """
    deltas = interpolation_deltas(step)
    latents = np.stack([interpolate_latents(xi1, xi2, float(d)) for d in deltas])
    grids = generate(model, latents, n_steps)
    return InterpolationReport(deltas, consecutive_ssim(grids), anchored_ssim(grids), grids)
