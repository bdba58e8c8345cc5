"""
Tests for the command-line entry point and its exit codes
"""

import json
from pathlib import Path

import pytest

from src.core.cli import EXIT_CONFIG, EXIT_OK, EXIT_PIPELINE, EXIT_UNEXPECTED, EXIT_USAGE, build_parser, run_command
from src.core.pipeline_config import WORKERS_ENV
from src.primitives.errors import LinearSolverError


class TestParser:
    def test_every_command_accepts_config_and_workers(self):
        args = build_parser().parse_args(["hm", "--config", "c.json", "--workers", "2", "--case", "2"])
        assert (args.command, args.config, args.workers, args.case) == ("hm", "c.json", 2, 2)

    def test_sampling_options(self):
        args = build_parser().parse_args(["sample", "--count", "5", "--xi-source", "encoder"])
        assert args.count == 5 and args.xi_source == "encoder" and args.sampler == "ddim"


class TestExitCodes:
    def test_missing_command(self, capsys):
        assert run_command([]) == EXIT_USAGE

    def test_unknown_command(self, capsys):
        assert run_command(["deploy"]) == EXIT_USAGE
        assert "invalid choice" in capsys.readouterr().err

    def test_help(self, capsys):
        assert run_command(["--help"]) == EXIT_OK
        assert "ldm-geomodel" in capsys.readouterr().out

    def test_bad_option_value(self, capsys):
        assert run_command(["hm", "--case", "3"]) == EXIT_USAGE

    def test_configuration_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"vae": {"lambda_kl": -1}}))
        assert run_command(["train-vae", "--config", str(path)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "configuration error" in err and "vae.lambda_kl" in err

    def test_invalid_worker_env(self, tiny_config_file, monkeypatch, capsys):
        monkeypatch.setenv(WORKERS_ENV, "zero")
        assert run_command(["simulate", "--config", str(tiny_config_file)]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path, capsys):
        assert run_command(["simulate", "--config", str(tmp_path / "absent.json")]) == EXIT_PIPELINE
        assert capsys.readouterr().err.startswith("[IO]")

    def test_pipeline_error_carries_code(self, tiny_config_file, mocker, capsys, monkeypatch):
        monkeypatch.delenv(WORKERS_ENV, raising=False)
        mocker.patch(
            "src.core.cli.PipelineOrchestrator.run", side_effect=LinearSolverError("singular pressure matrix")
        )
        assert run_command(["simulate", "--config", str(tiny_config_file)]) == EXIT_PIPELINE
        assert capsys.readouterr().err.startswith("[FLOW-SOLVER]")

    def test_unexpected_error(self, tiny_config_file, mocker, capsys, monkeypatch):
        monkeypatch.delenv(WORKERS_ENV, raising=False)
        mocker.patch("src.core.cli.PipelineOrchestrator.run", side_effect=RuntimeError("boom"))
        assert run_command(["simulate", "--config", str(tiny_config_file)]) == EXIT_UNEXPECTED


class TestCommands:
    def test_simulate(self, tiny_config_file, tiny_pipeline, capsys, monkeypatch):
        monkeypatch.delenv(WORKERS_ENV, raising=False)
        assert run_command(["simulate", "--config", str(tiny_config_file)]) == EXIT_OK
        assert "simulate: wrote" in capsys.readouterr().out
        runs = list((Path(tiny_pipeline["paths"]["output_dir"]) / "runs").glob("simulate-*"))
        assert len(runs) == 1

    def test_sample_twice_is_byte_identical(self, tiny_config_file, tiny_pipeline, capsys, monkeypatch):
        monkeypatch.delenv(WORKERS_ENV, raising=False)
        argv = ["sample", "--config", str(tiny_config_file), "--count", "2", "--seed", "1"]
        assert run_command(argv) == EXIT_OK
        runs = Path(tiny_pipeline["paths"]["output_dir"]) / "runs"
        samples = next(runs.glob("sample-*")) / "sample" / "samples.ggds"
        first = samples.read_bytes()
        assert run_command(argv) == EXIT_OK
        assert samples.read_bytes() == first
        assert len(list(runs.glob("sample-*"))) == 1
