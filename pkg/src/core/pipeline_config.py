"""
PipelineConfig Core

The experiment record behind every CLI run: one JSON document with sections
geogen, vae, diffusion, flow, esmda and paths plus the global seed and worker
count.

Interface:
- parse_config(path) → PipelineConfig
- parse_config_text(text) → PipelineConfig
- serialize(config) → str
- default_config() → PipelineConfig
- resolve_workers(config, flag) → int

Missing sections and keys fall back to DEFAULTS (desk-scale grid, training
and history-matching values). The merged document is validated against
JSONValidator.PIPELINE_CONFIG_SCHEMA plus a few cross-field rules; every
violation is reported in one ConfigError.
"""

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

from src.components.channel_generator import ChannelStyle
from src.components.ensemble_smoother import DEFAULT_ALPHAS, PROPERTY_PRIORS, check_alphas
from src.features.flow_statistics import FlowSetup
from src.features.history_matching import HmConfig
from src.features.ldm_training import LdmTrainingConfig
from src.features.vae_training import VaeTrainingConfig
from src.primitives.config_loader import ConfigLoader
from src.primitives.errors import ConfigError, GeomodelError
from src.primitives.facies import ConditioningSet
from src.primitives.json_validator import JSONValidator

WORKERS_ENV = "LDM_WORKERS"
SECTIONS = ("geogen", "vae", "diffusion", "flow", "esmda", "paths")
LATENT_FACTOR = 8


def _prior_rows(priors) -> list[dict]:
    return [{"mean": p.mean, "std": p.std, "min": p.low, "max": p.high} for p in priors]


DEFAULTS: dict = {
    "seed": 0,
    "workers": 1,
    "geogen": {
        "nx": 32,
        "ny": 32,
        "n_channels": [2, 4],
        "width": [2.0, 4.0],
        "amplitude": [1.0, 4.0],
        "wavelength": [12.0, 32.0],
        "orientation": [-0.35, 0.35],
        "levee_halfwidth": [1.0, 1.5],
        "retry_budget": 1000,
        "repair_attempts": 100,
        "n_total": 500,
        "split": [0.7, 0.2, 0.1],
        "conditioning": None,
    },
    "vae": {
        "channels": [8, 16, 32],
        "latent_channels": 1,
        "norm_groups": 4,
        "lambda_kl": 1e-6,
        "lambda_h": 10.0,
        "lr": 1e-4,
        "batch_size": 16,
        "epochs": 20,
        "max_steps": None,
    },
    "diffusion": {
        "T": 1000,
        "beta_1": 1e-4,
        "beta_T": 0.02,
        "ddim_steps": 50,
        "channels": 32,
        "time_embed_dim": 64,
        "norm_groups": 4,
        "downsample": False,
        "lr": 1e-4,
        "batch_size": 16,
        "epochs": 50,
        "max_steps": None,
        "xi_source": "normal",
    },
    "flow": {
        "dx": 20.0,
        "dy": 20.0,
        "dz": 5.0,
        "porosity": [0.05, 0.15, 0.2],
        "permeability": [50.0, 400.0, 2500.0],
        "mu_w": 0.31,
        "mu_o": 1.09,
        "swc": 0.1,
        "sor": 0.2,
        "nw": 2.0,
        "no": 2.0,
        "krw_end": 0.4,
        "kro_end": 1.0,
        "sw_init": 0.1,
        "p_init": 310.0,
        "c_w": 4.5e-5,
        "c_o": 1e-4,
        "injector_bhp": 330.0,
        "producer_bhp": 300.0,
        "rw": 0.1,
        "t_end": 2500.0,
        "max_dt": 50.0,
        "report_interval": None,
        "wells": None,
    },
    "esmda": {
        "case": 1,
        "ensemble_size": 200,
        "alphas": list(DEFAULT_ALPHAS),
        "obs_rel_std": 0.02,
        "obs_abs_floor": 1e-6,
        "obs_every": 100.0,
        "obs_until": 1000.0,
        "n_medoids": 5,
        "truth_seed": 12345,
        "property_priors": {
            "porosity": _prior_rows(PROPERTY_PRIORS[:3]),
            "log_permeability": _prior_rows(PROPERTY_PRIORS[3:]),
        },
    },
    "paths": {
        "output_dir": "out",
        "dataset": None,
        "vae_checkpoint": None,
        "ldm_checkpoint": None,
        "true_model": None,
    },
}


def merge_defaults(data: dict) -> dict:
    """Defaults overlaid by the document, one level deep per section."""
    merged = copy.deepcopy(DEFAULTS)
    for key, value in data.items():
        if key in SECTIONS and isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(copy.deepcopy(value))
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _cross_field_errors(data: dict) -> list[str]:
    """Rules a JSON schema cannot express."""
    errors = []
    geogen, diffusion, esmda = data["geogen"], data["diffusion"], data["esmda"]
    for axis in ("nx", "ny"):
        if geogen[axis] % LATENT_FACTOR:
            errors.append(f"geogen.{axis}: {geogen[axis]} is not divisible by {LATENT_FACTOR}")
    if abs(math.fsum(geogen["split"]) - 1.0) > 1e-9:
        errors.append(f"geogen.split: fractions {geogen['split']} do not sum to 1")
    if diffusion["beta_1"] > diffusion["beta_T"]:
        errors.append("diffusion.beta_1: must not exceed beta_T")
    if diffusion["ddim_steps"] > diffusion["T"]:
        errors.append(f"diffusion.ddim_steps: {diffusion['ddim_steps']} exceeds T={diffusion['T']}")
    try:
        check_alphas(esmda["alphas"])
    except GeomodelError as e:
        errors.append(f"esmda.alphas: {e}")
    for name, rows in esmda["property_priors"].items():
        for k, row in enumerate(rows):
            if not row["min"] <= row["mean"] <= row["max"]:
                errors.append(f"esmda.property_priors.{name}.{k}: mean outside [min, max]")
    flow = data["flow"]
    if flow["swc"] + flow["sor"] >= 1.0:
        errors.append("flow.swc: swc + sor must be below 1")
    return errors


@dataclass(frozen=True)
class PipelineConfig:
    """Validated, defaults-merged pipeline configuration"""

    seed: int = 0
    workers: int = 1
    geogen: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["geogen"]))
    vae: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["vae"]))
    diffusion: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["diffusion"]))
    flow: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["flow"]))
    esmda: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["esmda"]))
    paths: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["paths"]))

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        """
        Merge defaults, then validate.

        Raises:
            ConfigError: Listing every schema and cross-field violation
        """
        merged = merge_defaults(data)
        ok, errors = JSONValidator().validate_pipeline_config(merged)
        if ok:
            errors = _cross_field_errors(merged)
        if errors:
            raise ConfigError(errors)
        return cls(**{key: merged[key] for key in ("seed", "workers", *SECTIONS)})

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "workers": self.workers,
            **{name: copy.deepcopy(getattr(self, name)) for name in SECTIONS},
        }

    def digest(self) -> str:
        """sha256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def grid_shape(self) -> tuple[int, int]:
        return (self.geogen["ny"], self.geogen["nx"])

    def style(self) -> ChannelStyle:
        return ChannelStyle.from_config(self.geogen)

    def conditioning(self) -> ConditioningSet:
        """Configured hard data, or channel facies at the standard well sites."""
        points = self.geogen.get("conditioning")
        if points is None:
            return ConditioningSet.at_well_sites(self.geogen["nx"], self.geogen["ny"])
        return ConditioningSet.from_points(points)

    def vae_training(self, seed: int) -> VaeTrainingConfig:
        return VaeTrainingConfig.from_config(self.vae, seed)

    def ldm_training(self, seed: int) -> LdmTrainingConfig:
        return LdmTrainingConfig.from_config(self.diffusion, seed)

    def flow_setup(self) -> FlowSetup:
        return FlowSetup.from_config(self.flow, self.geogen["nx"], self.geogen["ny"])

    def hm_config(self, seed: int, case: Optional[int] = None) -> HmConfig:
        section = dict(self.esmda)
        if case is not None:
            section["case"] = case
        return HmConfig.from_config(section, self.diffusion["ddim_steps"], seed)


def default_config() -> PipelineConfig:
    return PipelineConfig.from_dict({})


def parse_config_text(text: str, source: str = "<string>") -> PipelineConfig:
    return PipelineConfig.from_dict(ConfigLoader().parse_text(text, source))


def parse_config(path: Optional[str]) -> PipelineConfig:
    """
    Load a pipeline config file.

    Args:
        path: JSON config; None means all defaults

    Returns:
        PipelineConfig with every default filled in

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: On malformed JSON (line/column), unknown keys or
            out-of-range values (all listed)
    """
    if path is None:
        return default_config()
    return PipelineConfig.from_dict(ConfigLoader().load(path))


def serialize(config: PipelineConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def resolve_workers(config: PipelineConfig, flag: Optional[int] = None) -> int:
    """--workers flag, then LDM_WORKERS, then the config value."""
    if flag is not None:
        value, source = flag, "--workers"
    elif os.environ.get(WORKERS_ENV):
        raw = os.environ[WORKERS_ENV]
        try:
            value, source = int(raw), WORKERS_ENV
        except ValueError as e:
            raise ConfigError([f"{WORKERS_ENV}: {raw!r} is not an integer"]) from e
    else:
        return config.workers
    if value < 1:
        raise ConfigError([f"{source}: worker count must be at least 1, got {value}"])
    return value
