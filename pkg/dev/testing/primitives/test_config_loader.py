"""
Tests for the ConfigLoader primitive

Covers: blank files, malformed JSON diagnostics, env substitution, schema errors.
"""

import json

import pytest

from src.primitives.config_loader import ConfigLoader
from src.primitives.errors import ConfigError
from src.primitives.json_validator import JSONValidator


@pytest.fixture
def loader():
    return ConfigLoader()


class TestConfigLoader:
    def test_load_valid_file(self, loader, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"seed": 3, "workers": 2}), encoding="utf-8")
        assert loader.load(str(path)) == {"seed": 3, "workers": 2}

    def test_blank_file_is_empty_dict(self, loader, tmp_path):
        """An empty config means all defaults"""
        path = tmp_path / "empty.json"
        path.write_text("  \n", encoding="utf-8")
        assert loader.load(str(path)) == {}

    def test_missing_file(self, loader, tmp_path):
        with pytest.raises(FileNotFoundError):
            loader.load(str(tmp_path / "absent.json"))

    def test_malformed_json_reports_position(self, loader):
        with pytest.raises(ConfigError) as info:
            loader.parse_text('{\n  "seed": ,\n}', source="bad.json")
        assert info.value.code == "CFG"
        assert "bad.json: line 2" in info.value.errors[0]

    def test_top_level_must_be_object(self, loader):
        with pytest.raises(ConfigError, match="JSON object"):
            loader.parse_text("[1, 2]")

    def test_env_substitution(self, loader, tmp_path, monkeypatch):
        monkeypatch.setenv("LDM_OUT", "/data/runs")
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"paths": {"output_dir": "${LDM_OUT}/a"}}), encoding="utf-8")
        assert loader.load(str(path))["paths"]["output_dir"] == "/data/runs/a"

    def test_undefined_env_var(self, loader, tmp_path, monkeypatch):
        monkeypatch.delenv("LDM_MISSING_VAR", raising=False)
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"x": "${LDM_MISSING_VAR}"}), encoding="utf-8")
        with pytest.raises(ConfigError, match="LDM_MISSING_VAR"):
            loader.load(str(path))

    def test_schema_violations_all_listed(self, loader, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"seed": -1, "workers": 0}), encoding="utf-8")
        with pytest.raises(ConfigError) as info:
            loader.load(str(path), schema=JSONValidator.PIPELINE_CONFIG_SCHEMA)
        joined = "\n".join(info.value.errors)
        assert "seed" in joined and "workers" in joined
