"""
LdmTraining Feature

Trains the denoiser on latents of the frozen VAE.

Composes:
- VaeNetwork, DenoiserNetwork (component)
- NoiseScheduler: make_linear_schedule, ddpm_loss (component)
- Adam (component)
- Dataset (feature)
- Checkpoint, FileWriter, SeedSplitter, Logger (primitive)

Clean latents are the encoder means of the training realizations, computed
once. The returned checkpoint holds the VAE parameters, the best-validation
denoiser parameters, the optimizer state from that same step and the schedule.
"""

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from src.components.adam import AdamState, adam_step
from src.components.denoiser_network import DenoiserNetwork
from src.components.noise_scheduler import SchedulerTable, ddpm_loss, make_linear_schedule
from src.components.vae_network import VaeNetwork
from src.features.dataset_builder import Dataset
from src.features.vae_training import TrainingResult
from src.primitives.checkpoint_codec import Checkpoint
from src.primitives.dataset_codec import stack_continuous
from src.primitives.errors import CheckpointFormatError, NonFiniteGradientError, TrainingDivergedError
from src.primitives.file_writer import FileWriter
from src.primitives.logger import Logger
from src.primitives.seed_splitter import SeedSplitter

LDM_LOG_HEADER = ("step", "loss")
SCHEDULE_KEY = "schedule"


@dataclass(frozen=True)
class LdmTrainingConfig:
    T: int = 1000
    beta_1: float = 1e-4
    beta_T: float = 0.02
    channels: int = 32
    time_embed_dim: int = 64
    norm_groups: int = 4
    downsample: bool = False
    lr: float = 1e-4
    batch_size: int = 16
    epochs: int = 50
    max_steps: Optional[int] = None
    seed: int = 0

    @classmethod
    def from_config(cls, section: dict, seed: int = 0) -> "LdmTrainingConfig":
        names = {f.name for f in fields(cls)}
        values = {k: v for k, v in section.items() if k in names}
        values.setdefault("seed", seed)
        return cls(**values)

    def schedule(self) -> SchedulerTable:
        return make_linear_schedule(self.T, self.beta_1, self.beta_T)


def schedule_from_checkpoint(checkpoint: Checkpoint) -> SchedulerTable:
    try:
        meta = checkpoint.metadata[SCHEDULE_KEY]
    except KeyError as e:
        raise CheckpointFormatError("checkpoint has no diffusion schedule") from e
    return make_linear_schedule(int(meta["T"]), float(meta["beta_1"]), float(meta["beta_T"]))


def encode_means(vae: VaeNetwork, grids, batch_size: int = 64) -> np.ndarray:
    """Encoder means (N, C, h, w) of a list of grids."""
    x = stack_continuous(grids)
    chunks = [vae.encode(x[s:s + batch_size]).mu for s in range(0, len(x), batch_size)]
    return np.concatenate(chunks).astype(np.float32)


def validation_loss(network: DenoiserNetwork, xi0: np.ndarray, sched: SchedulerTable, seed: int, batch_size: int) -> float:
    """Mean diffusion loss over fixed (t, eps) draws."""
    total = 0.0
    for k, start in enumerate(range(0, len(xi0), batch_size)):
        batch = xi0[start:start + batch_size]
        loss = ddpm_loss(network.predict_noise, batch, sched, SeedSplitter.hash_seed(seed, f"val-{k}"))
        total += loss * len(batch)
    return total / max(len(xi0), 1)


def ldm_checkpoint(
    vae_checkpoint: Checkpoint,
    network: DenoiserNetwork,
    state: AdamState,
    config: LdmTrainingConfig,
    extra: Optional[dict] = None,
) -> Checkpoint:
    params = {k: v for k, v in vae_checkpoint.params.items() if k.startswith(f"{VaeNetwork.CHECKPOINT_PREFIX}.")}
    params.update(network.prefixed_state())
    metadata = dict(vae_checkpoint.metadata)
    metadata[DenoiserNetwork.CHECKPOINT_PREFIX] = network.architecture()
    metadata[SCHEDULE_KEY] = {"T": config.T, "beta_1": config.beta_1, "beta_T": config.beta_T}
    metadata.pop("training", None)
    metadata.update(extra or {})
    optimizer = {f"{DenoiserNetwork.CHECKPOINT_PREFIX}.{k}": v for k, v in state.to_tensors().items()}
    return Checkpoint(params, optimizer, metadata)


def train_ldm(
    vae_checkpoint: Checkpoint,
    dataset: Dataset,
    config: LdmTrainingConfig,
    logger: Optional[Logger] = None,
    log_path: Optional[str] = None,
) -> TrainingResult:
    """
    Train the denoiser with the VAE frozen.

    Args:
        vae_checkpoint: Trained VAE
        dataset: Realizations with partition
        config: Schedule, architecture and optimization settings
        log_path: Optional CSV for per-step losses (step, loss)

    Returns:
        TrainingResult whose checkpoint holds both networks

    Raises:
        TrainingDivergedError: If the loss or a gradient becomes non-finite
    """
    train = dataset.train
    if not train:
        raise TrainingDivergedError("training partition is empty")
    vae = VaeNetwork.from_checkpoint(vae_checkpoint)
    sched = config.schedule()
    xi_train = encode_means(vae, train)
    xi_val = encode_means(vae, dataset.val) if dataset.val else xi_train

    network = DenoiserNetwork(
        latent_channels=vae.latent_channels,
        channels=config.channels,
        time_embed_dim=config.time_embed_dim,
        norm_groups=config.norm_groups,
        downsample=config.downsample,
        seed=config.seed,
    )
    params = network.parameters()
    state = AdamState(lr=config.lr)
    result = TrainingResult(checkpoint=ldm_checkpoint(vae_checkpoint, network, state, config))
    best_state = network.state()
    best_optimizer = state.snapshot()
    if logger:
        logger.info(
            "LDM training started",
            {"train": len(xi_train), "latent_shape": list(xi_train.shape[1:]), "parameters": network.parameter_count(), "T": config.T},
        )

    step = 0
    for epoch in range(config.epochs):
        order = SeedSplitter.generator(config.seed, 5, epoch).permutation(len(xi_train))
        for start in range(0, len(order), config.batch_size):
            batch = xi_train[order[start:start + config.batch_size]]
            network.zero_grad()
            try:
                loss = ddpm_loss(network, batch, sched, SeedSplitter.hash_seed(config.seed, f"step-{step}"))
                loss.backward()
                adam_step(params, state)
            except NonFiniteGradientError as e:
                raise TrainingDivergedError(f"LDM step {step}: {e}") from e
            step += 1
            result.history.append([step, float(loss.data)])
            if config.max_steps is not None and step >= config.max_steps:
                break

        val = validation_loss(network, xi_val, sched, config.seed, config.batch_size)
        result.validation.append((step, val))
        if val < result.best_validation:
            result.best_validation = val
            result.best_step = step
            best_state = network.state()
            best_optimizer = state.snapshot()
        if logger:
            logger.info("LDM epoch", {"epoch": epoch, "step": step, "train_loss": result.history[-1][1], "val_loss": val})
        if config.max_steps is not None and step >= config.max_steps:
            break

    network.load_state(best_state)
    result.checkpoint = ldm_checkpoint(
        vae_checkpoint,
        network,
        best_optimizer,
        config,
        {"training": {"best_step": result.best_step, "best_validation": result.best_validation, "steps": step}},
    )
    if log_path:
        FileWriter().write_csv(log_path, LDM_LOG_HEADER, result.history)
    if logger:
        logger.info("LDM training complete", {"steps": step, "best_step": result.best_step, "best_validation": result.best_validation})
    return result
