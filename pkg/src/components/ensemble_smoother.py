"""
EnsembleSmoother Component

Ensemble smoother with multiple data assimilation over history-matching
vectors: a flattened latent (row-major over (h, w)), optionally followed by six
facies properties [phi_mud, phi_levee, phi_channel, lnk_mud, lnk_levee, lnk_channel].

Composes:
- SeedSplitter (primitive)
- Logger (primitive)

Update for member j with inflation alpha:
    x_j <- x_j + C_xd (C_dd + alpha C_d)^-1 (d*_j - d_j)
with C_xd, C_dd the ensemble (co)variances normalized by N_e - 1 and
d*_j ~ N(d_obs, alpha C_d). Property components are clipped back to their
prior bounds after each update.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.stats import truncnorm

from src.primitives.errors import EnsembleError, InflationScheduleError
from src.primitives.logger import Logger
from src.primitives.seed_splitter import SeedSplitter

CASE_LATENT = 1
CASE_LATENT_PROPERTIES = 2

DEFAULT_ALPHAS = (57.017, 35.0, 25.0, 20.0, 18.0, 15.0, 12.0, 8.0, 5.0, 3.0)
ALPHA_TOLERANCE = 1e-3


@dataclass(frozen=True)
class PropertyPrior:
    name: str
    mean: float
    std: float
    low: float
    high: float

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        a, b = (self.low - self.mean) / self.std, (self.high - self.mean) / self.std
        return truncnorm.rvs(a, b, loc=self.mean, scale=self.std, size=size, random_state=rng)


# Order matches the property block of a history-matching vector
PROPERTY_PRIORS = (
    PropertyPrior("phi_mud", 0.075, 0.0125, 0.05, 0.10),
    PropertyPrior("phi_levee", 0.16, 0.02, 0.12, 0.20),
    PropertyPrior("phi_channel", 0.26, 0.02, 0.22, 0.30),
    PropertyPrior("lnk_mud", 3.45, 0.23, 3.00, 3.91),
    PropertyPrior("lnk_levee", 5.41, 0.40, 4.61, 6.21),
    PropertyPrior("lnk_channel", 7.46, 0.27, 6.91, 8.00),
)
N_PROPERTIES = len(PROPERTY_PRIORS)


def priors_from_config(section: Optional[dict]) -> tuple[PropertyPrior, ...]:
    """Priors from {"porosity": [3 rows], "log_permeability": [3 rows]}, rows {mean, std, min, max}."""
    if not section:
        return PROPERTY_PRIORS
    rows = list(section["porosity"]) + list(section["log_permeability"])
    return tuple(
        PropertyPrior(default.name, float(r["mean"]), float(r["std"]), float(r["min"]), float(r["max"]))
        for default, r in zip(PROPERTY_PRIORS, rows)
    )


def property_bounds(priors: Sequence[PropertyPrior] = PROPERTY_PRIORS) -> tuple[np.ndarray, np.ndarray]:
    return np.array([p.low for p in priors]), np.array([p.high for p in priors])


def split_properties(props: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(porosity, permeability in mD) per facies from a property block."""
    props = np.asarray(props, dtype=np.float64)
    return props[..., :3], np.exp(props[..., 3:6])


@dataclass(frozen=True)
class Ensemble:
    """N_e stacked history-matching vectors"""

    members: np.ndarray
    n_latent: int
    case: int = CASE_LATENT
    step: int = 0

    def __post_init__(self):
        members = np.asarray(self.members, dtype=np.float64)
        if members.ndim != 2 or members.shape[0] < 2:
            raise EnsembleError(f"ensemble needs at least 2 members as rows, got shape {members.shape}")
        if self.case not in (CASE_LATENT, CASE_LATENT_PROPERTIES):
            raise EnsembleError(f"case must be 1 or 2, got {self.case}")
        expected = self.n_latent + (N_PROPERTIES if self.case == CASE_LATENT_PROPERTIES else 0)
        if members.shape[1] != expected:
            raise EnsembleError(f"member length {members.shape[1]}, case {self.case} needs {expected}")
        object.__setattr__(self, "members", members)

    @property
    def size(self) -> int:
        return self.members.shape[0]

    @property
    def latent(self) -> np.ndarray:
        return self.members[:, : self.n_latent]

    @property
    def properties(self) -> Optional[np.ndarray]:
        if self.case != CASE_LATENT_PROPERTIES:
            return None
        return self.members[:, self.n_latent:]

    def latents(self, shape: Sequence[int]) -> np.ndarray:
        """Latents reshaped to (N_e, *shape)."""
        return self.latent.reshape((self.size, *shape))

    def with_members(self, members: np.ndarray, step: Optional[int] = None) -> "Ensemble":
        return replace(self, members=members, step=self.step if step is None else step)


@dataclass(frozen=True)
class EsmdaConfig:
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    ensemble_size: int = 200
    relative_noise: float = 0.02
    noise_floor: float = 1e-6
    case: int = CASE_LATENT
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        check_alphas(self.alphas)
        if self.ensemble_size < 2:
            raise EnsembleError(f"ensemble size must be at least 2, got {self.ensemble_size}")

    @property
    def n_steps(self) -> int:
        return len(self.alphas)


def check_alphas(alphas: Sequence[float], tolerance: float = ALPHA_TOLERANCE) -> float:
    """
    Validate an inflation schedule.

    Returns:
        sum(1/alpha)

    Raises:
        InflationScheduleError: If any alpha <= 0 or sum(1/alpha) is not 1
    """
    if len(alphas) == 0 or any(a <= 0 for a in alphas):
        raise InflationScheduleError(f"inflation coefficients must be positive and non-empty, got {list(alphas)}")
    total = float(np.sum(1.0 / np.asarray(alphas, dtype=np.float64)))
    if abs(total - 1.0) > tolerance:
        raise InflationScheduleError(f"sum of 1/alpha is {total:.6f}, expected 1 within {tolerance}")
    return total


@dataclass(frozen=True)
class ObservationSet:
    """Observed data and the diagonal of its error covariance"""

    d_obs: np.ndarray
    c_d: np.ndarray

    def __post_init__(self):
        d_obs = np.asarray(self.d_obs, dtype=np.float64).reshape(-1)
        c_d = np.asarray(self.c_d, dtype=np.float64).reshape(-1)
        if d_obs.shape != c_d.shape:
            raise EnsembleError(f"d_obs has {d_obs.size} values, C_d diagonal has {c_d.size}")
        if not np.all(np.isfinite(c_d)) or np.any(c_d < 0):
            raise EnsembleError("C_d diagonal must be finite and non-negative")
        object.__setattr__(self, "d_obs", d_obs)
        object.__setattr__(self, "c_d", c_d)

    @property
    def size(self) -> int:
        return self.d_obs.size

    @classmethod
    def from_true_data(
        cls, d_true: np.ndarray, relative_noise: float = 0.02, floor: float = 1e-6
    ) -> "ObservationSet":
        """C_d = (relative_noise * d_true)^2, std floored at floor * max|d_true|."""
        d_true = np.asarray(d_true, dtype=np.float64)
        scale = float(np.max(np.abs(d_true))) if d_true.size else 0.0
        std_floor = floor * (scale if scale > 0 else 1.0)
        std = np.maximum(relative_noise * np.abs(d_true), std_floor)
        return cls(d_true, std ** 2)


@dataclass
class EsmdaStep:
    step: int
    alpha: float
    mean_mismatch: float

    def as_row(self) -> list:
        return [self.step, self.alpha, self.mean_mismatch]


@dataclass
class EsmdaResult:
    ensembles: list[Ensemble]
    predictions: list[np.ndarray]
    diagnostics: list[EsmdaStep] = field(default_factory=list)

    @property
    def prior(self) -> Ensemble:
        return self.ensembles[0]

    @property
    def posterior(self) -> Ensemble:
        return self.ensembles[-1]


def init_ensemble(
    case: int,
    ensemble_size: int,
    latent_shape: Sequence[int],
    seed: int,
    priors: Sequence[PropertyPrior] = PROPERTY_PRIORS,
) -> Ensemble:
    """
    Draw the prior ensemble.

    Latent components are i.i.d. N(0, 1). In case 2 each property is drawn from
    its normal prior truncated to [low, high].

    Raises:
        EnsembleError: If ensemble_size < 2
    """
    if ensemble_size < 2:
        raise EnsembleError(f"ensemble size must be at least 2, got {ensemble_size}")
    n_latent = int(np.prod(latent_shape))
    latent = SeedSplitter.generator(seed, 0).standard_normal((ensemble_size, n_latent))
    if case != CASE_LATENT_PROPERTIES:
        return Ensemble(latent, n_latent, case)
    rng = SeedSplitter.generator(seed, 1)
    props = np.column_stack([p.sample(ensemble_size, rng) for p in priors])
    return Ensemble(np.hstack([latent, props]), n_latent, case)


def perturb_obs(obs: ObservationSet, alpha: float, seed: int, size: Optional[int] = None) -> np.ndarray:
    """
    Draw d* = d_obs + sqrt(alpha) * C_d^(1/2) * z.

    Returns:
        (N_d,) vector, or (size, N_d) when size is given

    Raises:
        InflationScheduleError: If alpha <= 0
    """
    if alpha <= 0:
        raise InflationScheduleError(f"alpha must be positive, got {alpha}")
    shape = (obs.size,) if size is None else (size, obs.size)
    z = SeedSplitter.generator(seed).standard_normal(shape)
    return obs.d_obs + np.sqrt(alpha) * np.sqrt(obs.c_d) * z


def cross_covariance(x: np.ndarray, d: np.ndarray) -> np.ndarray:
    """(n_x, n_d) sample cross-covariance of row-stacked ensembles."""
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    dx = x - x.mean(axis=0)
    dd = d - d.mean(axis=0)
    return dx.T @ dd / (x.shape[0] - 1)


def auto_covariance(d: np.ndarray) -> np.ndarray:
    return cross_covariance(d, d)


def esmda_update(
    ens: Ensemble,
    d_sim: np.ndarray,
    obs: ObservationSet,
    alpha: float,
    seed: int = 0,
    d_perturbed: Optional[np.ndarray] = None,
    priors: Sequence[PropertyPrior] = PROPERTY_PRIORS,
) -> Ensemble:
    """
    One ESMDA analysis step.

    Args:
        ens: Current ensemble
        d_sim: (N_e, N_d) simulated data, row j for member j
        obs: Observed data and C_d
        alpha: Inflation coefficient for this step
        seed: Seed for the observation perturbations
        d_perturbed: Pre-drawn (N_e, N_d) perturbed observations (overrides seed)

    Returns:
        Updated ensemble with step incremented

    Raises:
        EnsembleError: On shape mismatches or a failed solve
    """
    d_sim = np.asarray(d_sim, dtype=np.float64)
    if d_sim.shape != (ens.size, obs.size):
        raise EnsembleError(f"d_sim has shape {d_sim.shape}, expected {(ens.size, obs.size)}")
    if d_perturbed is None:
        d_perturbed = perturb_obs(obs, alpha, seed, size=ens.size)
    elif alpha <= 0:
        raise InflationScheduleError(f"alpha must be positive, got {alpha}")
    d_perturbed = np.asarray(d_perturbed, dtype=np.float64)
    if d_perturbed.shape != d_sim.shape:
        raise EnsembleError(f"perturbed data shape {d_perturbed.shape} differs from d_sim {d_sim.shape}")

    c_xd = cross_covariance(ens.members, d_sim)
    system = auto_covariance(d_sim) + alpha * np.diag(obs.c_d)
    try:
        gain_rhs = linalg.solve(system, (d_perturbed - d_sim).T, assume_a="sym")
    except (linalg.LinAlgError, ValueError) as e:
        raise EnsembleError(f"ESMDA solve failed: {e}") from e
    updated = ens.members + (c_xd @ gain_rhs).T
    if not np.all(np.isfinite(updated)):
        raise EnsembleError("ESMDA update produced non-finite members")

    if ens.case == CASE_LATENT_PROPERTIES:
        low, high = property_bounds(priors)
        updated[:, ens.n_latent:] = np.clip(updated[:, ens.n_latent:], low, high)
    return ens.with_members(updated, step=ens.step + 1)


def normalized_mismatch(d_sim: np.ndarray, obs: ObservationSet) -> np.ndarray:
    """Per-member (1/N_d) (d - d_obs)^T C_d^-1 (d - d_obs)."""
    d_sim = np.atleast_2d(np.asarray(d_sim, dtype=np.float64))
    if obs.size == 0:
        return np.zeros(d_sim.shape[0])
    residual = d_sim - obs.d_obs
    weights = np.divide(1.0, obs.c_d, out=np.zeros_like(obs.c_d), where=obs.c_d > 0)
    return np.sum(residual ** 2 * weights, axis=1) / obs.size


ForwardModel = Callable[[Ensemble], np.ndarray]


def run_esmda(
    config: EsmdaConfig,
    forward: ForwardModel,
    obs: ObservationSet,
    prior: Ensemble,
    logger: Optional[Logger] = None,
    priors: Sequence[PropertyPrior] = PROPERTY_PRIORS,
) -> EsmdaResult:
    """
    Iterate forward runs and updates over the inflation schedule.

    The forward model maps an ensemble to its (N_e, N_d) predictions. It is
    evaluated N_a + 1 times so the posterior's mismatch is reported too.

    Returns:
        EsmdaResult with ensembles and predictions for steps 0..N_a
    """
    ensembles = [prior]
    predictions = []
    diagnostics = []
    current = prior
    for step, alpha in enumerate(config.alphas):
        d_sim = np.asarray(forward(current), dtype=np.float64)
        predictions.append(d_sim)
        mismatch = float(normalized_mismatch(d_sim, obs).mean())
        diagnostics.append(EsmdaStep(step, config.alphas[step - 1] if step else 0.0, mismatch))
        if logger:
            logger.info("Assimilation step", {"step": step, "alpha": alpha, "mean_mismatch": mismatch})
        seed = SeedSplitter.hash_seed(config.seed, f"perturb-{step}")
        current = esmda_update(current, d_sim, obs, alpha, seed=seed, priors=priors)
        ensembles.append(current)

    d_final = np.asarray(forward(current), dtype=np.float64)
    predictions.append(d_final)
    final_mismatch = float(normalized_mismatch(d_final, obs).mean())
    diagnostics.append(EsmdaStep(config.n_steps, config.alphas[-1], final_mismatch))
    if logger:
        logger.info(
            "ESMDA complete",
            {"steps": config.n_steps, "prior_mismatch": diagnostics[0].mean_mismatch, "posterior_mismatch": final_mismatch},
        )
    return EsmdaResult(ensembles, predictions, diagnostics)
