"""
HistoryMatching Feature

Twin-experiment history matching of LDM latents (case 1) or latents plus
facies properties (case 2) with ESMDA.

Composes:
- EnsembleSmoother: init_ensemble, run_esmda (component)
- Observations: extract_observations (component)
- MedoidSelector (component)
- ChannelGenerator (component) for the true model
- GeomodelSampling: LatentDiffusionModel, generate (feature)
- FlowStatistics: FlowSetup, simulate_ensemble, summarize_series (feature)
- EnsembleCodec, DatasetCodec, FileWriter, SeedSplitter, Logger (primitive)

Forward model for member j: DDIM-generate the facies grid from its latent,
set facies properties (base values in case 1, member values in case 2),
simulate over the full period and extract the history-window observations.
The simulated series are kept for the first and latest forward runs so that
prior and posterior forecasts cover the whole period.
"""

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from src.components.channel_generator import ChannelStyle, generate_realization
from src.components.ensemble_smoother import (
    CASE_LATENT_PROPERTIES,
    DEFAULT_ALPHAS,
    PROPERTY_PRIORS,
    Ensemble,
    EsmdaConfig,
    EsmdaResult,
    ObservationSet,
    PropertyPrior,
    init_ensemble,
    priors_from_config,
    run_esmda,
    split_properties,
)
from src.components.impes_solver import WellSeries
from src.components.medoid_selector import kmeans_medoids
from src.components.observations import ObservationLayout, extract_observations
from src.features.flow_statistics import BAND_HEADER, FlowSetup, FlowStatistics, simulate_ensemble, summarize_series
from src.features.geomodel_sampling import LatentDiffusionModel, generate
from src.primitives.dataset_codec import DatasetCodec
from src.primitives.ensemble_codec import EnsembleCodec
from src.primitives.facies import ConditioningSet, FaciesGrid
from src.primitives.file_writer import FileWriter
from src.primitives.logger import Logger
from src.primitives.seed_splitter import SeedSplitter

MISMATCH_HEADER = ("step", "alpha", "mean_mismatch")
TRUTH_PROPERTY_STREAM = 9
OBSERVATION_NOISE_STREAM = 11


@dataclass(frozen=True)
class HmConfig:
    case: int = 1
    ensemble_size: int = 200
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    obs_rel_std: float = 0.02
    obs_abs_floor: float = 1e-6
    obs_every: float = 100.0
    obs_until: float = 1000.0
    n_medoids: int = 5
    truth_seed: int = 12345
    ddim_steps: int = 50
    seed: int = 0
    priors: tuple[PropertyPrior, ...] = PROPERTY_PRIORS

    @classmethod
    def from_config(cls, esmda: dict, ddim_steps: int = 50, seed: int = 0) -> "HmConfig":
        names = {f.name for f in fields(cls)} - {"priors", "ddim_steps", "seed"}
        values = {k: (tuple(v) if isinstance(v, list) else v) for k, v in esmda.items() if k in names}
        return cls(**values, ddim_steps=ddim_steps, seed=seed, priors=priors_from_config(esmda.get("property_priors")))

    def esmda(self) -> EsmdaConfig:
        return EsmdaConfig(self.alphas, self.ensemble_size, self.obs_rel_std, self.obs_abs_floor, self.case, self.seed)


@dataclass(frozen=True)
class TwinTruth:
    grid: FaciesGrid
    properties: Optional[np.ndarray] = None

    def setup(self, base: FlowSetup) -> FlowSetup:
        if self.properties is None:
            return base
        porosity, permeability = split_properties(self.properties)
        return base.with_properties(porosity, permeability)


def make_twin_truth(
    style: ChannelStyle,
    cond: ConditioningSet,
    truth_seed: int,
    case: int = 1,
    priors: Sequence[PropertyPrior] = PROPERTY_PRIORS,
) -> TwinTruth:
    """True model from the reference generator; case 2 also draws its properties."""
    grid = generate_realization(style, cond, truth_seed)
    if case != CASE_LATENT_PROPERTIES:
        return TwinTruth(grid)
    rng = SeedSplitter.generator(truth_seed, TRUTH_PROPERTY_STREAM)
    return TwinTruth(grid, np.array([p.sample(1, rng)[0] for p in priors]))


def observe_truth(
    truth: TwinTruth,
    setup: FlowSetup,
    config: HmConfig,
) -> tuple[ObservationSet, ObservationLayout, WellSeries]:
    """
    Simulate the true model and build noisy observations.

    C_d is fixed from the true simulated values; d_obs adds one draw of that
    noise to them.
    """
    series = truth.setup(setup).run(truth.grid)
    d_true, layout = extract_observations(series, config.obs_every, config.obs_until)
    clean = ObservationSet.from_true_data(d_true, config.obs_rel_std, config.obs_abs_floor)
    z = SeedSplitter.generator(config.seed, OBSERVATION_NOISE_STREAM).standard_normal(d_true.shape)
    return ObservationSet(d_true + np.sqrt(clean.c_d) * z, clean.c_d), layout, series


class LatentForwardModel:
    """Ensemble -> (N_e, N_d) predictions through generation and simulation"""

    def __init__(
        self,
        model: LatentDiffusionModel,
        setup: FlowSetup,
        layout: ObservationLayout,
        config: HmConfig,
        workers: int = 1,
        logger: Optional[Logger] = None,
    ):
        self.model = model
        self.setup = setup
        self.layout = layout
        self.config = config
        self.workers = workers
        self.logger = logger
        self.calls = 0
        self.first: Optional[tuple[list[FaciesGrid], list[WellSeries]]] = None
        self.latest: Optional[tuple[list[FaciesGrid], list[WellSeries]]] = None

    def member_setups(self, ens: Ensemble) -> list[FlowSetup]:
        props = ens.properties
        if props is None:
            return [self.setup] * ens.size
        return [self.setup.with_properties(*split_properties(p)) for p in props]

    def grids(self, ens: Ensemble) -> list[FaciesGrid]:
        return generate(self.model, ens.latents(self.model.latent_shape), self.config.ddim_steps)

    def __call__(self, ens: Ensemble) -> np.ndarray:
        grids = self.grids(ens)
        series = simulate_ensemble(grids, self.member_setups(ens), self.workers)
        d_sim = np.stack(
            [extract_observations(s, self.config.obs_every, self.config.obs_until, self.layout.keys)[0] for s in series]
        )
        if self.first is None:
            self.first = (grids, series)
        self.latest = (grids, series)
        self.calls += 1
        if self.logger:
            self.logger.debug("Forward model evaluated", {"call": self.calls, "members": ens.size})
        return d_sim


@dataclass
class PropertySummary:
    names: list[str]
    prior_mean: np.ndarray
    prior_std: np.ndarray
    posterior_mean: np.ndarray
    posterior_std: np.ndarray
    truth: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        out = {}
        for k, name in enumerate(self.names):
            out[name] = {
                "prior_mean": float(self.prior_mean[k]),
                "prior_std": float(self.prior_std[k]),
                "posterior_mean": float(self.posterior_mean[k]),
                "posterior_std": float(self.posterior_std[k]),
            }
            if self.truth is not None:
                out[name]["truth"] = float(self.truth[k])
        return out


def summarize_properties(
    prior: Ensemble, posterior: Ensemble, truth: Optional[np.ndarray], priors: Sequence[PropertyPrior] = PROPERTY_PRIORS
) -> Optional[PropertySummary]:
    if prior.properties is None:
        return None
    return PropertySummary(
        [p.name for p in priors],
        prior.properties.mean(axis=0),
        prior.properties.std(axis=0, ddof=1),
        posterior.properties.mean(axis=0),
        posterior.properties.std(axis=0, ddof=1),
        truth,
    )


@dataclass
class HistoryMatchResult:
    esmda: EsmdaResult
    obs: ObservationSet
    layout: ObservationLayout
    truth: TwinTruth
    truth_series: WellSeries
    d_true: np.ndarray
    prior_forecast: FlowStatistics
    posterior_forecast: FlowStatistics
    prior_grids: list[FaciesGrid]
    posterior_grids: list[FaciesGrid]
    prior_medoids: list[int] = field(default_factory=list)
    posterior_medoids: list[int] = field(default_factory=list)
    properties: Optional[PropertySummary] = None

    @property
    def mismatch_reduction(self) -> float:
        first = self.esmda.diagnostics[0].mean_mismatch
        last = self.esmda.diagnostics[-1].mean_mismatch
        return first / last if last > 0 else float("inf")

    def history_bracket_fraction(self) -> float:
        """Share of true history-window data inside the posterior P10-P90 band."""
        if self.d_true.size == 0:
            return 1.0
        low, high = np.percentile(self.esmda.predictions[-1], [10.0, 90.0], axis=0, method="linear")
        return float(np.mean((self.d_true >= low) & (self.d_true <= high)))

    def summary(self) -> dict:
        out = {
            "case": self.esmda.prior.case,
            "ensemble_size": self.esmda.prior.size,
            "steps": len(self.esmda.diagnostics) - 1,
            "mismatch": [d.mean_mismatch for d in self.esmda.diagnostics],
            "mismatch_reduction": self.mismatch_reduction,
            "history_bracket_fraction": self.history_bracket_fraction(),
            "prior_medoids": self.prior_medoids,
            "posterior_medoids": self.posterior_medoids,
            "prior_top_injector": self.prior_forecast.top_injector,
            "posterior_top_injector": self.posterior_forecast.top_injector,
        }
        if self.properties is not None:
            out["properties"] = self.properties.to_dict()
        return out


def run_history_matching(
    model: LatentDiffusionModel,
    setup: FlowSetup,
    truth: TwinTruth,
    config: HmConfig,
    workers: int = 1,
    logger: Optional[Logger] = None,
) -> HistoryMatchResult:
    """
    Full twin experiment: observe the truth, assimilate, forecast, pick medoids.

    Raises:
        InflationScheduleError: If the alpha schedule is invalid
        ForwardModelError: If a member's generation or simulation fails
    """
    esmda_config = config.esmda()
    obs, layout, truth_series = observe_truth(truth, setup, config)
    if logger:
        logger.info(
            "History matching started",
            {"case": config.case, "ensemble_size": config.ensemble_size, "observations": obs.size, "steps": esmda_config.n_steps},
        )
    prior = init_ensemble(config.case, config.ensemble_size, model.latent_shape, config.seed, config.priors)
    forward = LatentForwardModel(model, setup, layout, config, workers, logger)
    result = run_esmda(esmda_config, forward, obs, prior, logger, config.priors)

    prior_grids, prior_series = forward.first
    posterior_grids, posterior_series = forward.latest
    k = min(config.n_medoids, len(prior_grids))
    hm = HistoryMatchResult(
        esmda=result,
        obs=obs,
        layout=layout,
        truth=truth,
        truth_series=truth_series,
        d_true=extract_observations(truth_series, config.obs_every, config.obs_until, layout.keys)[0],
        prior_forecast=summarize_series(prior_series),
        posterior_forecast=summarize_series(posterior_series),
        prior_grids=prior_grids,
        posterior_grids=posterior_grids,
        prior_medoids=kmeans_medoids(prior_grids, k, config.seed).indices.tolist(),
        posterior_medoids=kmeans_medoids(posterior_grids, k, config.seed).indices.tolist(),
        properties=summarize_properties(result.prior, result.posterior, truth.properties, config.priors),
    )
    if logger:
        logger.info("History matching complete", {"mismatch_reduction": hm.mismatch_reduction})
    return hm


def write_history_matching(result: HistoryMatchResult, directory: str) -> dict[str, str]:
    """
    Persist ensembles, mismatch log, observations, forecasts and medoids.

    Returns:
        Output name -> path
    """
    directory = Path(directory)
    writer = FileWriter()
    codec = EnsembleCodec()
    outputs = {}
    for step, ens in enumerate(result.esmda.ensembles):
        path = str(directory / "ensembles" / f"step_{step:02d}.hmv")
        codec.save(path, ens.members)
        outputs[f"ensemble_{step:02d}"] = path

    outputs["mismatch"] = str(directory / "mismatch.csv")
    writer.write_csv(outputs["mismatch"], MISMATCH_HEADER, [d.as_row() for d in result.esmda.diagnostics])

    outputs["observations"] = str(directory / "observations.json")
    writer.write(
        outputs["observations"],
        {"layout": result.layout.to_dict(), "d_obs": result.obs.d_obs.tolist(), "c_d": result.obs.c_d.tolist()},
    )

    for label, stats in (("prior", result.prior_forecast), ("posterior", result.posterior_forecast)):
        for name, band in stats.bands.items():
            path = str(directory / "forecasts" / label / f"{name.replace(':', '_')}.csv")
            writer.write_csv(path, BAND_HEADER, band.to_rows())
        outputs[f"{label}_forecasts"] = str(directory / "forecasts" / label)

    datasets = DatasetCodec()
    for label, grids, indices in (
        ("prior", result.prior_grids, result.prior_medoids),
        ("posterior", result.posterior_grids, result.posterior_medoids),
    ):
        path = str(directory / f"{label}_medoids.ggds")
        datasets.save(path, [grids[i] for i in indices])
        outputs[f"{label}_medoids"] = path

    outputs["truth"] = str(directory / "truth.ggds")
    datasets.save(outputs["truth"], [result.truth.grid])
    outputs["summary"] = str(directory / "summary.json")
    writer.write(outputs["summary"], result.summary())
    return outputs
