"""
NoiseScheduler Component

Linear variance schedule, forward noising, the noise-prediction loss and the
DDPM / DDIM reverse samplers in latent space.

Composes:
- Tensor (primitive)
- SeedSplitter (primitive)

Timesteps are 1-based (t = 1..T) and alpha_bar at t = 0 is defined as 1.
A denoiser is any callable net(x, t) -> predicted noise, where x has shape
(N, C, h, w) and t is an int array of shape (N,).

Interface:
- make_linear_schedule(T, beta1, betaT) → SchedulerTable
- forward_noise(x0, t, eps, sched) → ndarray
- ddpm_loss(net, xi0, sched, seed) → Tensor | float
- ddpm_sample_step(x_t, t, net, sched, z) → ndarray
- ddim_sample_step(x_t, t, net, sched, t_prev=None) → ndarray
- ddim_substep_schedule(T, n_steps) → list[int]
- ddim_sample(x_T, net, sched, n_steps) → ndarray
- ddpm_sample(x_T, net, sched, seed) → ndarray
- interpolate_latents(xi1, xi2, delta) → ndarray
"""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from src.primitives.errors import (
    InterpolationRangeError,
    NonFiniteGradientError,
    ScheduleError,
    ShapeMismatchError,
    TimestepRangeError,
)
from src.primitives.seed_splitter import SeedSplitter
from src.primitives.tensor import Tensor

Denoiser = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SchedulerTable:
    """beta_t, alpha_t = 1 - beta_t and alpha_bar_t for t = 1..T (index t-1)"""

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def check_timestep(self, t) -> np.ndarray:
        steps = np.asarray(t, dtype=np.int64)
        if steps.size and (steps.min() < 1 or steps.max() > self.T):
            raise TimestepRangeError(f"timestep {t} outside 1..{self.T}")
        return steps

    def alpha_bar_at(self, t) -> np.ndarray:
        """alpha_bar for t in 0..T, with alpha_bar(0) = 1."""
        steps = np.asarray(t, dtype=np.int64)
        padded = np.concatenate([[1.0], self.alpha_bar])
        return padded[steps]


def make_linear_schedule(T: int, beta1: float = 1e-4, betaT: float = 0.02) -> SchedulerTable:
    """
    Linear beta schedule from beta1 to betaT inclusive.

    Raises:
        ScheduleError: Unless T >= 1 and 0 < beta1 <= betaT < 1
    """
    if T < 1 or not (0.0 < beta1 <= betaT < 1.0):
        raise ScheduleError(f"invalid schedule T={T}, beta1={beta1}, betaT={betaT}")
    beta = np.linspace(beta1, betaT, T, dtype=np.float64)
    alpha = 1.0 - beta
    return SchedulerTable(T=T, beta=beta, alpha=alpha, alpha_bar=np.cumprod(alpha))


def _per_sample(values: np.ndarray, like: np.ndarray) -> np.ndarray:
    """Broadcast per-sample scalars against a (N, ...) or unbatched array."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 0:
        return values
    return values.reshape(values.shape + (1,) * (like.ndim - 1))


def forward_noise(x0: np.ndarray, t, eps: np.ndarray, sched: SchedulerTable) -> np.ndarray:
    """sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps"""
    x0 = np.asarray(x0)
    eps = np.asarray(eps)
    if x0.shape != eps.shape:
        raise ShapeMismatchError(f"x0 {x0.shape} and eps {eps.shape} differ")
    steps = sched.check_timestep(t)
    ab = _per_sample(sched.alpha_bar_at(steps), x0)
    return (np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps).astype(x0.dtype)


def forward_step(x_prev: np.ndarray, t, eps: np.ndarray, sched: SchedulerTable) -> np.ndarray:
    """Single noising step q(x_t | x_{t-1}): sqrt(alpha_t) x_{t-1} + sqrt(beta_t) eps"""
    steps = sched.check_timestep(t)
    a = _per_sample(sched.alpha[steps - 1], x_prev)
    b = _per_sample(sched.beta[steps - 1], x_prev)
    return np.sqrt(a) * x_prev + np.sqrt(b) * eps


def ddpm_loss(net, xi0: np.ndarray, sched: SchedulerTable, seed: int) -> Union[Tensor, float]:
    """
    Noise-prediction loss for a batch of clean latents.

    Draws t ~ U{1..T} and eps ~ N(0, I) per batch element from seed, noises
    xi0 and returns the squared error between eps and net(x_t, t), summed
    over cells and averaged over the batch.

    Args:
        net: Denoiser; a Tensor output keeps the graph for backward()
        xi0: (N, C, h, w) clean latents

    Returns:
        Tensor when net returns a Tensor, otherwise float

    Raises:
        ShapeMismatchError: On an empty batch
        NonFiniteGradientError: If the loss is not finite
    """
    xi0 = np.asarray(xi0, dtype=np.float32)
    if xi0.ndim != 4 or xi0.shape[0] == 0:
        raise ShapeMismatchError(f"ddpm_loss needs a non-empty (N,C,h,w) batch, got {xi0.shape}")
    rng = SeedSplitter.generator(seed)
    batch = xi0.shape[0]
    t = rng.integers(1, sched.T + 1, size=batch)
    eps = rng.standard_normal(xi0.shape).astype(np.float32)
    x_t = forward_noise(xi0, t, eps, sched)

    predicted = net(Tensor(x_t), t)
    if isinstance(predicted, Tensor):
        diff = predicted - Tensor(eps)
        loss = diff.square().sum() * (1.0 / batch)
        value = float(loss.data)
    else:
        loss = float(np.sum((np.asarray(predicted) - eps) ** 2) / batch)
        value = loss
    if not np.isfinite(value):
        raise NonFiniteGradientError(f"non-finite diffusion loss {value}")
    return loss


def _eps(net, x_t: np.ndarray, t: int) -> np.ndarray:
    batched = x_t if x_t.ndim == 4 else x_t[None]
    out = net(batched, np.full(batched.shape[0], t, dtype=np.int64))
    out = out.data if isinstance(out, Tensor) else np.asarray(out)
    return out if x_t.ndim == 4 else out[0]


def ddpm_sample_step(x_t: np.ndarray, t: int, net, sched: SchedulerTable, z: np.ndarray) -> np.ndarray:
    """
    Ancestral step with sigma_t = sqrt(beta_t):
    x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps) / sqrt(alpha_t) + sigma_t z
    """
    sched.check_timestep(t)
    eps = _eps(net, x_t, t)
    alpha = sched.alpha[t - 1]
    beta = sched.beta[t - 1]
    mean = (x_t - beta / np.sqrt(1.0 - sched.alpha_bar[t - 1]) * eps) / np.sqrt(alpha)
    return (mean + np.sqrt(beta) * np.asarray(z)).astype(np.asarray(x_t).dtype)


def ddim_sample_step(x_t: np.ndarray, t: int, net, sched: SchedulerTable, t_prev: int = None) -> np.ndarray:
    """
    Deterministic DDIM step from t to t_prev (default t - 1):
    x_prev = sqrt(ab_prev) * (x_t - sqrt(1 - ab_t) eps) / sqrt(ab_t) + sqrt(1 - ab_prev) eps
    """
    sched.check_timestep(t)
    t_prev = t - 1 if t_prev is None else t_prev
    if not 0 <= t_prev < t:
        raise TimestepRangeError(f"previous timestep {t_prev} must lie in [0, {t})")
    eps = _eps(net, x_t, t)
    ab_t = sched.alpha_bar_at(t)
    ab_prev = sched.alpha_bar_at(t_prev)
    x0_pred = (x_t - np.sqrt(1.0 - ab_t) * eps) / np.sqrt(ab_t)
    return (np.sqrt(ab_prev) * x0_pred + np.sqrt(1.0 - ab_prev) * eps).astype(np.asarray(x_t).dtype)


def ddim_substep_schedule(T: int, n_steps: int) -> list[int]:
    """
    Evenly spaced, strictly decreasing timesteps from T down to 1.

    A single step starts from T.

    Raises:
        ScheduleError: Unless 1 <= n_steps <= T
    """
    if not 1 <= n_steps <= T:
        raise ScheduleError(f"n_steps={n_steps} must lie in 1..{T}")
    if n_steps == 1:
        return [T]
    return [int(v) for v in np.rint(np.linspace(T, 1, n_steps))]


def ddim_sample(x_T: np.ndarray, net, sched: SchedulerTable, n_steps: int) -> np.ndarray:
    """Run DDIM along the sub-step schedule down to t = 0."""
    steps = ddim_substep_schedule(sched.T, n_steps)
    x = np.asarray(x_T, dtype=np.float32)
    for index, t in enumerate(steps):
        t_prev = steps[index + 1] if index + 1 < len(steps) else 0
        x = ddim_sample_step(x, t, net, sched, t_prev)
    return x


def ddpm_sample(x_T: np.ndarray, net, sched: SchedulerTable, seed: int) -> np.ndarray:
    """Full T-step ancestral sampling; no noise is added at t = 1."""
    rng = SeedSplitter.generator(seed)
    x = np.asarray(x_T, dtype=np.float32)
    for t in range(sched.T, 0, -1):
        z = rng.standard_normal(x.shape).astype(np.float32) if t > 1 else np.zeros_like(x)
        x = ddpm_sample_step(x, t, net, sched, z)
    return x


def interpolate_latents(xi1: np.ndarray, xi2: np.ndarray, delta: float) -> np.ndarray:
    """
    xi1 (1 - delta) + xi2 delta

    Raises:
        InterpolationRangeError: Unless 0 <= delta <= 1
        ShapeMismatchError: If shapes differ
    """
    if not 0.0 <= delta <= 1.0:
        raise InterpolationRangeError(f"delta={delta} outside [0, 1]")
    xi1, xi2 = np.asarray(xi1), np.asarray(xi2)
    if xi1.shape != xi2.shape:
        raise ShapeMismatchError(f"latent shapes {xi1.shape} and {xi2.shape} differ")
    return xi1 * (1.0 - delta) + xi2 * delta
