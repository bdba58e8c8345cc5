"""
VaeTraining Feature

Trains the VAE on the training partition with Adam and keeps the parameters
with the lowest validation objective, together with the optimizer state of
that step.

Composes:
- VaeNetwork, vae_loss_tensors, vae_loss (component)
- Adam (component)
- Dataset (feature)
- CheckpointCodec, FileWriter, SeedSplitter, Logger (primitive)

Each step draws xi = mu + sigma * z (reparameterized), decodes it and
minimizes recon + lambda_kl * kl + lambda_h * hard. Validation runs at the end
of every epoch on the encoder mean and the clamped decoder output.
"""

from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from src.components.adam import AdamState, adam_step
from src.components.vae_network import VaeLossReport, VaeNetwork, build_report, vae_loss, vae_loss_tensors
from src.features.dataset_builder import Dataset
from src.primitives.checkpoint_codec import Checkpoint
from src.primitives.dataset_codec import stack_continuous
from src.primitives.errors import NonFiniteGradientError, TrainingDivergedError
from src.primitives.facies import ConditioningSet, FaciesGrid
from src.primitives.file_writer import FileWriter
from src.primitives.logger import Logger
from src.primitives.seed_splitter import SeedSplitter
from src.primitives.tensor import Tensor

VAE_LOG_HEADER = ("step", "recon", "kl", "hard", "total")


@dataclass(frozen=True)
class VaeTrainingConfig:
    channels: tuple[int, int, int] = (8, 16, 32)
    latent_channels: int = 1
    norm_groups: int = 4
    lambda_kl: float = 1e-6
    lambda_h: float = 10.0
    lr: float = 1e-4
    batch_size: int = 16
    epochs: int = 20
    max_steps: Optional[int] = None
    seed: int = 0

    @classmethod
    def from_config(cls, section: dict, seed: int = 0) -> "VaeTrainingConfig":
        names = {f.name for f in fields(cls)}
        values = {k: (tuple(v) if isinstance(v, list) else v) for k, v in section.items() if k in names}
        values.setdefault("seed", seed)
        return cls(**values)


@dataclass
class TrainingResult:
    checkpoint: Checkpoint
    history: list[list[float]] = field(default_factory=list)
    validation: list[tuple[int, float]] = field(default_factory=list)
    best_step: int = 0
    best_validation: float = float("inf")


def evaluate_vae(
    network: VaeNetwork,
    grids: Sequence[FaciesGrid],
    cond: ConditioningSet,
    lambda_kl: float,
    lambda_h: float,
    batch_size: int = 16,
) -> VaeLossReport:
    """Batch-size-weighted mean VAE objective over a set of grids."""
    x = stack_continuous(grids)
    totals = np.zeros(3)
    for start in range(0, len(x), batch_size):
        batch = x[start:start + batch_size]
        dist = network.encode(batch)
        report = vae_loss(batch, network.decode(dist.mu), dist, cond, lambda_kl, lambda_h)
        totals += len(batch) * np.array([report.recon, report.kl, report.hard])
    recon, kl, hard = totals / max(len(x), 1)
    return build_report(float(recon), float(kl), float(hard), lambda_kl, lambda_h)


def vae_checkpoint(network: VaeNetwork, state: AdamState, grid_shape: tuple[int, int], extra: Optional[dict] = None) -> Checkpoint:
    metadata = {VaeNetwork.CHECKPOINT_PREFIX: network.architecture(), "grid": list(grid_shape)}
    metadata.update(extra or {})
    optimizer = {f"{VaeNetwork.CHECKPOINT_PREFIX}.{k}": v for k, v in state.to_tensors().items()}
    return Checkpoint(network.prefixed_state(), optimizer, metadata)


def train_vae(
    dataset: Dataset,
    config: VaeTrainingConfig,
    logger: Optional[Logger] = None,
    log_path: Optional[str] = None,
) -> TrainingResult:
    """
    Train the VAE on dataset.train and return the best-validation checkpoint.

    Args:
        dataset: Realizations with partition and conditioning
        config: Architecture and optimization settings
        log_path: Optional CSV for per-step losses (step, recon, kl, hard, total)

    Returns:
        TrainingResult with the checkpoint and loss history

    Raises:
        TrainingDivergedError: If a loss or gradient becomes non-finite
    """
    train = dataset.train
    if not train:
        raise TrainingDivergedError("training partition is empty")
    val = dataset.val or train
    ny, nx = train[0].codes.shape
    cond = dataset.cond
    mask = cond.mask(nx, ny)
    n_hard = len(cond)
    x_train = stack_continuous(train)

    network = VaeNetwork(config.channels, config.latent_channels, config.norm_groups, seed=config.seed)
    params = network.parameters()
    state = AdamState(lr=config.lr)
    result = TrainingResult(checkpoint=vae_checkpoint(network, state, (ny, nx)))
    best_state = network.state()
    best_optimizer = state.snapshot()

    if logger:
        logger.info(
            "VAE training started",
            {"train": len(train), "val": len(val), "parameters": network.parameter_count(), "grid": [ny, nx]},
        )

    step = 0
    max_steps = config.max_steps
    for epoch in range(config.epochs):
        order = SeedSplitter.generator(config.seed, 3, epoch).permutation(len(x_train))
        for start in range(0, len(order), config.batch_size):
            batch = x_train[order[start:start + config.batch_size]]
            noise = SeedSplitter.generator(config.seed, 4, step).standard_normal(
                (len(batch), config.latent_channels, ny // 8, nx // 8)
            ).astype(np.float32)

            network.zero_grad()
            mu, log_var = network.encode_tensor(Tensor(batch))
            xi = mu + (log_var * 0.5).exp() * Tensor(noise)
            m_hat = network.decode_tensor(xi)
            recon, kl, hard = vae_loss_tensors(batch, m_hat, mu, log_var, mask, n_hard)
            total = recon + kl * config.lambda_kl + hard * config.lambda_h
            report = build_report(float(recon.data), float(kl.data), float(hard.data), config.lambda_kl, config.lambda_h)
            if not np.isfinite(report.total):
                raise TrainingDivergedError(f"non-finite VAE loss at step {step}: {report}")
            total.backward()
            try:
                adam_step(params, state)
            except NonFiniteGradientError as e:
                raise TrainingDivergedError(f"VAE step {step}: {e}") from e

            step += 1
            result.history.append([step, *report.as_row()])
            if max_steps is not None and step >= max_steps:
                break

        val_report = evaluate_vae(network, val, cond, config.lambda_kl, config.lambda_h, config.batch_size)
        result.validation.append((step, val_report.total))
        if val_report.total < result.best_validation:
            result.best_validation = val_report.total
            result.best_step = step
            best_state = network.state()
            best_optimizer = state.snapshot()
        if logger:
            logger.info(
                "VAE epoch",
                {"epoch": epoch, "step": step, "train_total": result.history[-1][-1], "val_total": val_report.total},
            )
        if max_steps is not None and step >= max_steps:
            break

    network.load_state(best_state)
    result.checkpoint = vae_checkpoint(
        network,
        best_optimizer,
        (ny, nx),
        {"training": {"best_step": result.best_step, "best_validation": result.best_validation, "steps": step}},
    )
    if log_path:
        FileWriter().write_csv(log_path, VAE_LOG_HEADER, result.history)
    if logger:
        logger.info("VAE training complete", {"steps": step, "best_step": result.best_step, "best_validation": result.best_validation})
    return result


def load_vae(checkpoint: Checkpoint) -> VaeNetwork:
    return VaeNetwork.from_checkpoint(checkpoint)
