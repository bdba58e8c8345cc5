"""
FileReader primitive for reading JSON, text, CSV and binary artifacts.
"""

import csv
import json
from pathlib import Path


class FileReader:
    """Reads pipeline artifacts from disk."""

    def _to_path(self, file_path: str) -> Path:
        """Convert string path to Path object."""
        return Path(file_path)

    def _require(self, file_path: str) -> Path:
        path = self._to_path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")
        return path

    def read(self, file_path: str) -> dict:
        """
        Read JSON file and return as dict.

        Raises:
            FileNotFoundError: If file doesn't exist
            json.JSONDecodeError: If JSON is malformed
        """
        with open(self._require(file_path), "r", encoding="utf-8") as f:
            return json.load(f)

    def read_text(self, file_path: str) -> str:
        """Read a UTF-8 text file."""
        return self._require(file_path).read_text(encoding="utf-8")

    def read_bytes(self, file_path: str) -> bytes:
        """Read a binary file."""
        return self._require(file_path).read_bytes()

    def read_csv(self, file_path: str) -> list[dict]:
        """Read a CSV file with a header row into a list of row dicts."""
        with open(self._require(file_path), "r", encoding="utf-8", newline="") as f:
            return list(csv.DictReader(f))

    def exists(self, file_path: str) -> bool:
        """Check if file exists."""
        return self._to_path(file_path).exists()
