"""
RunManifest Core

Record of what a CLI run is about to compute: config digest, code version,
per-stage seeds, arguments, creation time and the output paths it will write.

The manifest is written once, before the long computation, and never
rewritten. Its hash (timestamps excluded) names the run directory, so the same
command, config, arguments and code version always land in the same place.
When the run finishes, a separate completion record lists the files actually
written and the stage timings.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from src import __version__
from src.primitives.errors import ConfigError
from src.primitives.file_reader import FileReader
from src.primitives.file_writer import FileWriter
from src.primitives.json_validator import JSONValidator
from src.primitives.seed_splitter import SeedSplitter
from src.primitives.timestamp_generator import TimestampGenerator

MANIFEST_FILE = "manifest.json"
COMPLETION_FILE = "completed.json"
STAGES = ("gen-data", "train-vae", "train-ldm", "sample", "metrics", "interp", "simulate", "hm", "medoids")


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_hash: str
    code_version: str
    seeds: dict[str, int]
    created_at: str
    outputs: dict[str, str] = field(default_factory=dict)
    arguments: dict = field(default_factory=dict)

    @classmethod
    def create(
        cls, command: str, config_hash: str, global_seed: int, arguments: dict, outputs: dict[str, str]
    ) -> "RunManifest":
        return cls(
            command=command,
            config_hash=config_hash,
            code_version=__version__,
            seeds={"global": int(global_seed), **SeedSplitter(global_seed).stage_seeds(list(STAGES))},
            created_at=TimestampGenerator.now(),
            outputs=dict(outputs),
            arguments=dict(arguments),
        )

    def identity(self) -> dict:
        """Everything that determines the artifacts; no timestamps."""
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "code_version": self.code_version,
            "seeds": self.seeds,
            "arguments": self.arguments,
        }

    def digest(self) -> str:
        canonical = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def stage_seed(self, stage: str) -> int:
        return self.seeds[stage]

    def to_dict(self) -> dict:
        return {**self.identity(), "created_at": self.created_at, "outputs": dict(self.outputs)}

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        ok, errors = JSONValidator().validate_manifest(data)
        if not ok:
            raise ConfigError(errors)
        return cls(
            command=data["command"],
            config_hash=data["config_hash"],
            code_version=data["code_version"],
            seeds={k: int(v) for k, v in data["seeds"].items()},
            created_at=data["created_at"],
            outputs=dict(data["outputs"]),
            arguments=dict(data.get("arguments", {})),
        )


def write_manifest(manifest: RunManifest, run_dir: Path) -> str:
    """Write manifest.json into the run directory."""
    data = manifest.to_dict()
    ok, errors = JSONValidator().validate_manifest(data)
    if not ok:
        raise ConfigError(errors)
    path = str(Path(run_dir) / MANIFEST_FILE)
    FileWriter().write(path, data)
    return path


def read_manifest(run_dir: Path) -> RunManifest:
    return RunManifest.from_dict(FileReader().read(str(Path(run_dir) / MANIFEST_FILE)))


def write_completion(run_dir: Path, manifest: RunManifest, outputs: dict[str, str], timings: dict) -> str:
    """Record of a finished run next to its manifest."""
    finished_at = TimestampGenerator.now()
    path = str(Path(run_dir) / COMPLETION_FILE)
    FileWriter().write(
        path,
        {
            "manifest_hash": manifest.digest(),
            "finished_at": finished_at,
            "elapsed_s": TimestampGenerator.seconds_between(manifest.created_at, finished_at),
            "outputs": dict(outputs),
            "timings": timings,
        },
    )
    return path
