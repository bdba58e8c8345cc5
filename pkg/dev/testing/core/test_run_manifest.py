"""
Tests for run manifests and completion records
"""

import json
from dataclasses import replace

import pytest

from src import __version__
from src.core.run_manifest import (
    COMPLETION_FILE,
    MANIFEST_FILE,
    STAGES,
    RunManifest,
    read_manifest,
    write_completion,
    write_manifest,
)
from src.primitives.errors import ConfigError
from src.primitives.seed_splitter import SeedSplitter


@pytest.fixture
def manifest():
    return RunManifest.create("sample", "ab" * 32, 42, {"count": 3}, {"samples": "sample/samples.ggds"})


class TestRunManifest:
    def test_seeds_cover_every_stage(self, manifest):
        assert manifest.seeds["global"] == 42
        assert set(STAGES) <= set(manifest.seeds)
        assert manifest.stage_seed("hm") == SeedSplitter.hash_seed(42, "hm")
        assert manifest.code_version == __version__

    def test_digest_ignores_timestamps_and_outputs(self, manifest):
        later = replace(manifest, created_at="2030-01-01T00:00:00.000Z", outputs={})
        assert later.digest() == manifest.digest()

    def test_digest_follows_arguments(self, manifest):
        assert replace(manifest, arguments={"count": 4}).digest() != manifest.digest()
        assert replace(manifest, command="metrics").digest() != manifest.digest()

    def test_write_and_read(self, tmp_path, manifest):
        path = write_manifest(manifest, tmp_path)
        assert path.endswith(MANIFEST_FILE)
        assert read_manifest(tmp_path) == manifest

    def test_invalid_document(self):
        with pytest.raises(ConfigError):
            RunManifest.from_dict({"command": "sample"})

    def test_completion_record(self, tmp_path, manifest):
        path = write_completion(tmp_path, manifest, {"samples": "x.ggds"}, {"sample": {"duration_s": 0.5, "ok": True}})
        record = json.loads((tmp_path / COMPLETION_FILE).read_text())
        assert path.endswith(COMPLETION_FILE)
        assert record["manifest_hash"] == manifest.digest()
        assert record["outputs"] == {"samples": "x.ggds"}
        assert record["elapsed_s"] >= 0.0
        assert record["finished_at"].endswith("Z")
