"""
FileWriter primitive for writing pipeline artifacts.

Every write goes through a temp file in the target directory followed by an
atomic rename, so a crashed run never leaves a half-written artifact behind.
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence


class FileWriter:
    """Writes JSON, CSV, text and binary files atomically."""

    def _to_path(self, file_path: str) -> Path:
        """Convert string path to Path object."""
        return Path(file_path)

    def _ensure_parent_dirs(self, path: Path) -> None:
        """Ensure parent directories exist."""
        path.parent.mkdir(parents=True, exist_ok=True)

    def _dump_json(self, data: dict) -> str:
        """Serialize dict to deterministic JSON text."""
        return json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n"

    def write_bytes(self, file_path: str, payload: bytes) -> bool:
        """
        Write bytes atomically (temp file + rename in the same directory).

        Args:
            file_path: Destination path
            payload: Bytes to write

        Returns:
            bool: True if write successful

        Raises:
            PermissionError: If cannot write to location
        """
        path = self._to_path(file_path)
        self._ensure_parent_dirs(path)

        fd, temp_path = tempfile.mkstemp(dir=path.parent, suffix=".tmp", prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(payload)
            os.replace(temp_path, path)
        except Exception:
            try:
                os.unlink(temp_path)
            except FileNotFoundError:
                pass
            raise

        return True

    def write_text(self, file_path: str, text: str) -> bool:
        """Write UTF-8 text atomically."""
        return self.write_bytes(file_path, text.encode("utf-8"))

    def write(self, file_path: str, data: dict) -> bool:
        """
        Write dict to JSON file atomically with sorted keys.

        Creates parent directories if they don't exist.
        """
        return self.write_text(file_path, self._dump_json(data))

    def write_csv(
        self, file_path: str, header: Sequence[str], rows: Iterable[Sequence]
    ) -> bool:
        """
        Write rows under a header as CSV atomically.

        Floats are written with repr precision so files are byte-stable.
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
        return self.write_text(file_path, buffer.getvalue())
