"""
PipelineOrchestrator Core

Runs one CLI command inside its own run directory: plans the stages the
command needs, writes the run manifest, executes the stages in dependency
order and records what was written.

Composes:
- PipelineConfig, RunManifest, StageDependencyGraph, PerformanceTracker (core)
- DatasetBuilder, VaeTraining, LdmTraining, GeomodelSampling, FlowStatistics,
  HistoryMatching (feature)
- SpatialStatistics, MedoidSelector, ChannelGenerator (component)
- PathResolver, FileWriter, codecs, Logger (primitive)

A stage whose artifact is named in the config `paths` section (or by a
command option such as --models) is loaded instead of recomputed, and so are
the stages only it depended on. Each stage writes under <run>/<stage>/.
Inputs are never modified.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from src.components.channel_generator import generate_realization
from src.components.medoid_selector import kmeans_medoids
from src.components.spatial_statistics import DIRECTIONS, hard_data_accuracy, two_point_probability
from src.core.performance_tracker import PerformanceTracker
from src.core.pipeline_config import PipelineConfig, serialize
from src.core.run_manifest import RunManifest, write_completion, write_manifest
from src.core.stage_dependency_graph import StageDependencyGraph
from src.features.dataset_builder import Dataset, build_dataset
from src.features.flow_statistics import BAND_HEADER, FlowStatistics, flow_statistics
from src.features.geomodel_sampling import (
    SAMPLER_DDIM,
    LatentDiffusionModel,
    draw_start_latents,
    interpolation_stability,
    sample_geomodels,
)
from src.features.history_matching import make_twin_truth, run_history_matching, write_history_matching
from src.features.ldm_training import train_ldm
from src.features.vae_training import train_vae
from src.primitives.checkpoint_codec import Checkpoint, CheckpointCodec
from src.primitives.dataset_codec import DatasetCodec
from src.primitives.facies import FACIES_NAMES, FaciesGrid
from src.primitives.file_writer import FileWriter
from src.primitives.logger import Logger
from src.primitives.path_resolver import PathResolver

CONFIG_FILE = "config.json"
LOG_FILE = "run.log"
SERIES_HEADER = ("time", "well", "phase", "rate")
TWO_POINT_HEADER = ("lag", "reference_mean", "reference_min", "reference_max", "generated_mean")
INTERPOLATION_HEADER = ("delta", "anchored_ssim", "consecutive_ssim")

# Declared before the run starts; relative to the run directory
STAGE_OUTPUTS: dict[str, dict[str, str]] = {
    "gen-data": {
        "dataset": "gen-data/dataset.ggds",
        "split": "gen-data/split.json",
        "conditioning": "gen-data/conditioning.json",
    },
    "train-vae": {"vae_checkpoint": "train-vae/vae.ldmc", "vae_loss": "train-vae/loss.csv"},
    "train-ldm": {"ldm_checkpoint": "train-ldm/ldm.ldmc", "ldm_loss": "train-ldm/loss.csv"},
    "sample": {"samples": "sample/samples.ggds"},
    "metrics": {"metrics": "metrics/metrics.json", "two_point": "metrics/two_point"},
    "interp": {
        "interpolation": "interp/interpolation.json",
        "interpolation_ssim": "interp/ssim.csv",
        "interpolation_models": "interp/models.ggds",
    },
    "simulate": {"flow_summary": "simulate/summary.json", "series": "simulate/series", "bands": "simulate/bands"},
    "hm": {
        "ensembles": "hm/ensembles",
        "mismatch": "hm/mismatch.csv",
        "observations": "hm/observations.json",
        "hm_summary": "hm/summary.json",
    },
    "medoids": {"medoids": "medoids/medoids.ggds", "medoid_summary": "medoids/medoids.json"},
}

DEFAULT_OPTIONS: dict[str, Any] = {
    "count": 200,
    "seed": None,
    "xi_source": None,
    "sampler": SAMPLER_DDIM,
    "case": None,
    "step": 0.05,
    "k": None,
    "models": None,
    "flow": False,
}


@dataclass(frozen=True)
class RunResult:
    command: str
    run_dir: Path
    manifest: RunManifest
    outputs: dict[str, str]
    timings: dict


def _write_bands(directory: Path, stats: FlowStatistics) -> None:
    writer = FileWriter()
    for name, band in stats.bands.items():
        writer.write_csv(str(directory / f"{name.replace(':', '_')}.csv"), BAND_HEADER, band.to_rows())


class PipelineOrchestrator:
    """Plans and executes the stages behind one command"""

    def __init__(self, config: PipelineConfig, workers: int = 1, logger: Optional[Logger] = None):
        self.config = config
        self.workers = workers
        self.logger = logger
        self.path_resolver = PathResolver()
        self.file_writer = FileWriter()
        self.checkpoints = CheckpointCodec()
        self.datasets = DatasetCodec()
        self.artifacts: dict[str, Any] = {}
        self.options: dict[str, Any] = dict(DEFAULT_OPTIONS)
        self.manifest: Optional[RunManifest] = None
        self._handlers: dict[str, Callable[[Path], dict[str, str]]] = {
            "gen-data": self._gen_data,
            "train-vae": self._train_vae,
            "train-ldm": self._train_ldm,
            "sample": self._sample,
            "metrics": self._metrics,
            "interp": self._interp,
            "simulate": self._simulate,
            "hm": self._hm,
            "medoids": self._medoids,
        }

    # planning

    def build_graph(self, command: str, options: dict) -> StageDependencyGraph:
        """Dependency graph with externally supplied artifacts marked"""
        graph = StageDependencyGraph()
        paths = self.config.paths
        supplied = {
            "gen-data": paths.get("dataset"),
            "train-vae": paths.get("vae_checkpoint"),
            "train-ldm": paths.get("ldm_checkpoint"),
            "sample": options.get("models") if command == "medoids" else None,
        }
        for stage, path in supplied.items():
            if path and stage != command:
                graph.mark_supplied(stage)
        return graph

    def plan(self, command: str, options: Optional[dict] = None) -> list[str]:
        options = {**DEFAULT_OPTIONS, **(options or {})}
        order = self.build_graph(command, options).execution_order(command)
        if command == "sample" and self._xi_source(options) == "encoder" and "gen-data" not in order:
            if not self.config.paths.get("dataset"):
                order.insert(0, "gen-data")
        return order

    def _xi_source(self, options: dict) -> str:
        return options.get("xi_source") or self.config.diffusion["xi_source"]

    # execution

    def run(self, command: str, options: Optional[dict] = None) -> RunResult:
        """
        Execute a command in <output_dir>/runs/<command>-<hash12>/.

        The manifest (config hash, code version, seeds, arguments, declared
        outputs) is written before any stage starts.

        Raises:
            KeyError: On an unknown command
            GeomodelError: Whatever the failing stage raised
        """
        if command not in self._handlers:
            raise KeyError(f"unknown command {command!r}")
        self.options = {**DEFAULT_OPTIONS, **(options or {})}
        stages = self.plan(command, self.options)
        arguments = {k: v for k, v in self.options.items() if v is not None}
        manifest = RunManifest.create(command, self.config.digest(), self.config.seed, arguments, {})
        run_dir = self.path_resolver.create_run_dir(
            Path(self.config.paths["output_dir"]), command, manifest.digest()
        )
        declared = {
            name: str(run_dir / rel) for stage in stages for name, rel in STAGE_OUTPUTS[stage].items()
        }
        self.manifest = replace(manifest, outputs=declared)
        write_manifest(self.manifest, run_dir)
        self.file_writer.write_text(str(run_dir / CONFIG_FILE), serialize(self.config))

        own_logger = self.logger is None
        if own_logger:
            self.logger = Logger("pipeline", str(run_dir / LOG_FILE))
        tracker = PerformanceTracker(logger=self.logger)
        graph = self.build_graph(command, self.options)
        outputs: dict[str, str] = {}
        try:
            self.logger.info(
                "Run started",
                {"command": command, "stages": stages, "run_dir": str(run_dir), "workers": self.workers},
            )
            for stage in stages:
                stage_dir = self.path_resolver.create_stage_dir(run_dir, stage)
                try:
                    with tracker.track(stage):
                        outputs.update(self._handlers[stage](stage_dir))
                except Exception as e:
                    graph.mark_failed(stage, str(e))
                    self.logger.error("Stage failed", {"stage": stage, "error": str(e), "statuses": graph.summary()})
                    raise
                graph.mark_done(stage)
                self.logger.info("Stage complete", {"stage": stage, **tracker.get_metrics()[stage]})
            timings = tracker.get_metrics()
            write_completion(run_dir, self.manifest, outputs, timings)
            self.logger.info("Run complete", {"command": command, "total_s": tracker.total_seconds()})
        finally:
            if own_logger:
                self.logger.close()
                self.logger = None
        return RunResult(command, run_dir, self.manifest, outputs, timings)

    def _seed(self, stage: str) -> int:
        return self.manifest.stage_seed(stage)

    # artifacts, computed in this run or loaded from the configured paths

    def dataset(self) -> Dataset:
        if "dataset" not in self.artifacts:
            self.artifacts["dataset"] = Dataset.load(self.config.paths["dataset"])
        return self.artifacts["dataset"]

    def vae_checkpoint(self) -> Checkpoint:
        if "vae" not in self.artifacts:
            self.artifacts["vae"] = self.checkpoints.load(self.config.paths["vae_checkpoint"])
        return self.artifacts["vae"]

    def model(self) -> LatentDiffusionModel:
        if "model" not in self.artifacts:
            ckpt = self.artifacts.get("ldm") or self.checkpoints.load(self.config.paths["ldm_checkpoint"])
            self.artifacts["model"] = LatentDiffusionModel.from_checkpoint(ckpt)
        return self.artifacts["model"]

    def _models_option(self) -> Optional[list[FaciesGrid]]:
        path = self.options.get("models")
        return self.datasets.load(path) if path else None

    # stages

    def _gen_data(self, stage_dir: Path) -> dict[str, str]:
        geogen = self.config.geogen
        dataset = build_dataset(
            self.config.style(),
            self.config.conditioning(),
            geogen["n_total"],
            tuple(geogen["split"]),
            seed=self._seed("gen-data"),
            workers=self.workers,
            retry_budget=geogen["retry_budget"],
            repair_attempts=geogen["repair_attempts"],
            logger=self.logger,
        )
        self.artifacts["dataset"] = dataset
        return dataset.save(str(stage_dir))

    def _train_vae(self, stage_dir: Path) -> dict[str, str]:
        out = {"vae_checkpoint": str(stage_dir / "vae.ldmc"), "vae_loss": str(stage_dir / "loss.csv")}
        result = train_vae(
            self.dataset(), self.config.vae_training(self._seed("train-vae")), self.logger, out["vae_loss"]
        )
        self.artifacts["vae"] = result.checkpoint
        self.checkpoints.save(out["vae_checkpoint"], result.checkpoint)
        return out

    def _train_ldm(self, stage_dir: Path) -> dict[str, str]:
        out = {"ldm_checkpoint": str(stage_dir / "ldm.ldmc"), "ldm_loss": str(stage_dir / "loss.csv")}
        result = train_ldm(
            self.vae_checkpoint(),
            self.dataset(),
            self.config.ldm_training(self._seed("train-ldm")),
            self.logger,
            out["ldm_loss"],
        )
        self.artifacts["ldm"] = result.checkpoint
        self.artifacts.pop("model", None)
        self.checkpoints.save(out["ldm_checkpoint"], result.checkpoint)
        return out

    def _generate(self, stage: str) -> list[FaciesGrid]:
        source = self._xi_source(self.options)
        seed = self.options["seed"] if self.options.get("seed") is not None else self._seed(stage)
        return sample_geomodels(
            self.model(),
            int(self.options["count"]),
            seed,
            self.config.diffusion["ddim_steps"],
            source,
            self.dataset().train if source == "encoder" else None,
            self.options.get("sampler") or SAMPLER_DDIM,
        )

    def _sample(self, stage_dir: Path) -> dict[str, str]:
        grids = self._generate("sample")
        self.artifacts["samples"] = grids
        path = str(stage_dir / "samples.ggds")
        self.datasets.save(path, grids)
        self.logger.info("Geomodels sampled", {"count": len(grids), "path": path})
        return {"samples": path}

    def _metrics(self, stage_dir: Path) -> dict[str, str]:
        dataset = self.dataset()
        reference = dataset.test if len(dataset.test) >= 2 else dataset.val + dataset.test
        generated = self._generate("metrics")
        ny, nx = generated[0].codes.shape
        max_lag = min(nx, ny) // 2
        summary: dict[str, Any] = {
            "generated": len(generated),
            "reference": len(reference),
            "hard_data_accuracy": hard_data_accuracy(generated, dataset.cond),
            "two_point_inside": {},
        }
        for facies, name in enumerate(FACIES_NAMES):
            for direction in DIRECTIONS:
                _, ref_env = two_point_probability(reference, facies, direction, max_lag)
                _, gen_env = two_point_probability(generated, facies, direction, max_lag)
                key = f"{name}_{direction[0]}{direction[1]}"
                summary["two_point_inside"][key] = ref_env.inside_fraction(gen_env.mean)
                rows = [
                    [int(lag), float(m), float(lo), float(hi), float(g)]
                    for lag, m, lo, hi, g in zip(ref_env.lags, ref_env.mean, ref_env.low, ref_env.high, gen_env.mean)
                ]
                self.file_writer.write_csv(str(stage_dir / "two_point" / f"{key}.csv"), TWO_POINT_HEADER, rows)
        summary["two_point_inside_min"] = min(summary["two_point_inside"].values())

        if self.options.get("flow"):
            setup = self.config.flow_setup()
            for label, grids in (("reference", reference), ("generated", generated)):
                stats, _ = flow_statistics(grids, setup, self.workers, self.logger)
                _write_bands(stage_dir / "flow" / label, stats)
                summary[f"{label}_flow"] = stats.summary()

        path = str(stage_dir / "metrics.json")
        self.file_writer.write(path, summary)
        self.logger.info(
            "Metrics computed",
            {"hard_data_accuracy": summary["hard_data_accuracy"], "two_point_inside_min": summary["two_point_inside_min"]},
        )
        return {"metrics": path, "two_point": str(stage_dir / "two_point")}

    def _interp(self, stage_dir: Path) -> dict[str, str]:
        model = self.model()
        seed = self.options["seed"] if self.options.get("seed") is not None else self._seed("interp")
        xi1, xi2 = draw_start_latents(model, 2, seed)
        report = interpolation_stability(
            model, xi1, xi2, float(self.options["step"]), self.config.diffusion["ddim_steps"]
        )
        rows = [
            [float(d), float(a), float(report.consecutive[k - 1]) if k else ""]
            for k, (d, a) in enumerate(zip(report.deltas, report.anchored))
        ]
        out = {
            "interpolation": str(stage_dir / "interpolation.json"),
            "interpolation_ssim": str(stage_dir / "ssim.csv"),
            "interpolation_models": str(stage_dir / "models.ggds"),
        }
        self.file_writer.write_csv(out["interpolation_ssim"], INTERPOLATION_HEADER, rows)
        self.file_writer.write(out["interpolation"], report.summary())
        self.datasets.save(out["interpolation_models"], report.grids)
        self.logger.info("Interpolation evaluated", report.summary())
        return out

    def _simulation_models(self) -> list[FaciesGrid]:
        grids = self._models_option()
        if grids:
            return grids
        true_model = self.config.paths.get("true_model")
        if true_model:
            return self.datasets.load(true_model)[:1]
        return [
            generate_realization(self.config.style(), self.config.conditioning(), self.config.esmda["truth_seed"])
        ]

    def _simulate(self, stage_dir: Path) -> dict[str, str]:
        grids = self._simulation_models()
        stats, all_series = flow_statistics(grids, self.config.flow_setup(), self.workers, self.logger)
        for k, series in enumerate(all_series):
            self.file_writer.write_csv(str(stage_dir / "series" / f"model_{k:04d}.csv"), SERIES_HEADER, series.to_rows())
        _write_bands(stage_dir / "bands", stats)
        path = str(stage_dir / "summary.json")
        self.file_writer.write(path, {"models": len(grids), **stats.summary()})
        return {"flow_summary": path, "series": str(stage_dir / "series"), "bands": str(stage_dir / "bands")}

    def _hm(self, stage_dir: Path) -> dict[str, str]:
        hm_config = self.config.hm_config(self._seed("hm"), self.options.get("case"))
        truth = make_twin_truth(
            self.config.style(), self.config.conditioning(), hm_config.truth_seed, hm_config.case, hm_config.priors
        )
        if self.config.paths.get("true_model"):
            truth = replace(truth, grid=self.datasets.load(self.config.paths["true_model"])[0])
        result = run_history_matching(
            self.model(), self.config.flow_setup(), truth, hm_config, self.workers, self.logger
        )
        outputs = write_history_matching(result, str(stage_dir))
        outputs["hm_summary"] = outputs.pop("summary")
        return outputs

    def _medoids(self, stage_dir: Path) -> dict[str, str]:
        grids = self._models_option() or self.artifacts["samples"]
        k = self.options.get("k") or self.config.esmda["n_medoids"]
        selection = kmeans_medoids(grids, int(k), self._seed("medoids"), self.logger)
        out = {"medoids": str(stage_dir / "medoids.ggds"), "medoid_summary": str(stage_dir / "medoids.json")}
        self.datasets.save(out["medoids"], selection.grids(grids))
        self.file_writer.write(
            out["medoid_summary"],
            {
                "indices": selection.indices.tolist(),
                "cluster_sizes": np.bincount(selection.labels, minlength=int(k)).tolist(),
                "inertia": float(selection.inertia),
            },
        )
        return out
