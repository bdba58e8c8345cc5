"""
Tests for the FileReader primitive
"""

import json

import pytest

from src.primitives.file_reader import FileReader


@pytest.fixture
def reader():
    return FileReader()


class TestFileReader:
    def test_read_json(self, reader, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"seed": 7}), encoding="utf-8")
        assert reader.read(str(path)) == {"seed": 7}

    def test_malformed_json_raises(self, reader, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(json.JSONDecodeError):
            reader.read(str(path))

    def test_missing_file_raises_with_path(self, reader, tmp_path):
        missing = str(tmp_path / "nope.ggds")
        with pytest.raises(FileNotFoundError, match="nope.ggds"):
            reader.read_bytes(missing)

    def test_read_text_and_bytes(self, reader, tmp_path):
        path = tmp_path / "f"
        path.write_bytes(b"abc")
        assert reader.read_text(str(path)) == "abc"
        assert reader.read_bytes(str(path)) == b"abc"

    def test_read_csv_rows(self, reader, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("lag,value\n1,0.5\n2,0.25\n", encoding="utf-8")
        rows = reader.read_csv(str(path))
        assert rows == [{"lag": "1", "value": "0.5"}, {"lag": "2", "value": "0.25"}]

    def test_exists(self, reader, tmp_path):
        assert reader.exists(str(tmp_path)) is True
        assert reader.exists(str(tmp_path / "missing")) is False
