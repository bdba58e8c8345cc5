"""
Tests for PipelineOrchestrator: planning, run directories and stage outputs

A tiny pipeline is trained once per module; later stages load its artifacts
through the config paths section.
"""

import json
from pathlib import Path

import pytest

from src.core.pipeline_orchestrator import PipelineOrchestrator
from src.core.run_manifest import COMPLETION_FILE, MANIFEST_FILE
from src.primitives.dataset_codec import DatasetCodec
from src.primitives.errors import ForwardModelError


@pytest.fixture(scope="module")
def trained(tmp_path_factory, config_factory):
    out = tmp_path_factory.mktemp("trained")
    return PipelineOrchestrator(config_factory(out)).run("train-ldm")


@pytest.fixture
def supplied(tmp_path, trained, config_factory):
    return config_factory(
        tmp_path / "out",
        dataset=str(Path(trained.outputs["dataset"]).parent),
        ldm_checkpoint=trained.outputs["ldm_checkpoint"],
    )


class TestPlan:
    def test_training_chain(self, tmp_path, config_factory):
        orchestrator = PipelineOrchestrator(config_factory(tmp_path))
        assert orchestrator.plan("sample") == ["gen-data", "train-vae", "train-ldm", "sample"]
        assert orchestrator.plan("simulate") == ["simulate"]

    def test_supplied_checkpoint(self, tmp_path, config_factory):
        orchestrator = PipelineOrchestrator(config_factory(tmp_path, ldm_checkpoint="ldm.ldmc"))
        assert orchestrator.plan("sample") == ["sample"]
        assert orchestrator.plan("sample", {"xi_source": "encoder"}) == ["gen-data", "sample"]
        assert orchestrator.plan("hm") == ["hm"]

    def test_models_option_skips_sampling(self, tmp_path, config_factory):
        orchestrator = PipelineOrchestrator(config_factory(tmp_path, ldm_checkpoint="ldm.ldmc"))
        assert orchestrator.plan("medoids") == ["sample", "medoids"]
        assert orchestrator.plan("medoids", {"models": "set.ggds"}) == ["medoids"]

    def test_unknown_command(self, tmp_path, config_factory):
        with pytest.raises(KeyError):
            PipelineOrchestrator(config_factory(tmp_path)).run("deploy")


class TestTrainingRun:
    def test_run_directory_layout(self, trained):
        assert trained.run_dir.name.startswith("train-ldm-")
        assert len(trained.run_dir.name.rsplit("-", 1)[1]) == 12
        for name in (MANIFEST_FILE, COMPLETION_FILE, "config.json", "run.log"):
            assert (trained.run_dir / name).exists()
        assert set(trained.timings) == {"gen-data", "train-vae", "train-ldm"}

    def test_manifest_declares_outputs(self, trained):
        manifest = json.loads((trained.run_dir / MANIFEST_FILE).read_text())
        assert manifest["command"] == "train-ldm"
        assert manifest["outputs"]["ldm_checkpoint"] == trained.outputs["ldm_checkpoint"]
        completed = json.loads((trained.run_dir / COMPLETION_FILE).read_text())
        assert completed["outputs"] == trained.outputs
        assert Path(trained.outputs["vae_loss"]).exists()

    def test_log_is_json_lines(self, trained):
        events = [json.loads(line)["event"] for line in (trained.run_dir / "run.log").read_text().splitlines()]
        assert events[0] == "Run started" and events[-1] == "Run complete"


class TestStages:
    def test_sample_is_reproducible(self, supplied):
        first = PipelineOrchestrator(supplied).run("sample", {"count": 3, "seed": 4})
        payload = Path(first.outputs["samples"]).read_bytes()
        second = PipelineOrchestrator(supplied).run("sample", {"count": 3, "seed": 4})
        assert second.run_dir == first.run_dir
        assert Path(second.outputs["samples"]).read_bytes() == payload
        assert len(DatasetCodec().decode(payload)) == 3
        assert list(first.timings) == ["sample"]

    def test_metrics(self, supplied):
        result = PipelineOrchestrator(supplied).run("metrics", {"count": 4})
        metrics = json.loads(Path(result.outputs["metrics"]).read_text())
        assert metrics["generated"] == 4
        assert metrics["reference"] == 3
        assert metrics["hard_data_accuracy"] == 1.0
        assert len(metrics["two_point_inside"]) == 9
        assert len(list(Path(result.outputs["two_point"]).glob("*.csv"))) == 9

    def test_interp(self, supplied):
        result = PipelineOrchestrator(supplied).run("interp", {"step": 0.5})
        rows = Path(result.outputs["interpolation_ssim"]).read_text().splitlines()
        assert rows[0] == "delta,anchored_ssim,consecutive_ssim"
        assert len(rows) == 4
        assert len(DatasetCodec().load(result.outputs["interpolation_models"])) == 3

    def test_simulate_default_truth(self, supplied):
        result = PipelineOrchestrator(supplied).run("simulate")
        summary = json.loads(Path(result.outputs["flow_summary"]).read_text())
        assert summary["models"] == 1
        assert (Path(result.outputs["series"]) / "model_0000.csv").exists()
        assert (Path(result.outputs["bands"]) / "field_injection.csv").exists()

    def test_history_matching(self, supplied):
        result = PipelineOrchestrator(supplied).run("hm")
        summary = json.loads(Path(result.outputs["hm_summary"]).read_text())
        assert summary["steps"] == 2
        assert Path(result.outputs["ensemble_02"]).exists()

    def test_medoids_of_supplied_models(self, supplied, tmp_path):
        models = tmp_path / "models.ggds"
        sampled = PipelineOrchestrator(supplied).run("sample", {"count": 5, "seed": 2})
        models.write_bytes(Path(sampled.outputs["samples"]).read_bytes())
        result = PipelineOrchestrator(supplied).run("medoids", {"models": str(models), "k": 2})
        summary = json.loads(Path(result.outputs["medoid_summary"]).read_text())
        assert 1 <= len(summary["indices"]) <= 2
        assert sum(summary["cluster_sizes"]) == 5

    def test_failed_stage_leaves_no_completion(self, supplied, mocker):
        mocker.patch(
            "src.core.pipeline_orchestrator.flow_statistics", side_effect=ForwardModelError(0, "solver diverged")
        )
        orchestrator = PipelineOrchestrator(supplied)
        with pytest.raises(ForwardModelError):
            orchestrator.run("simulate")
        run_dir = next((Path(supplied.paths["output_dir"]) / "runs").glob("simulate-*"))
        assert (run_dir / MANIFEST_FILE).exists()
        assert not (run_dir / COMPLETION_FILE).exists()
        assert "Stage failed" in (run_dir / "run.log").read_text()
