"""
DatasetCodec Primitive

Binary facies-dataset format (*.ggds), little-endian:

    magic "GGDS" | version u32 | count u32 | nx u32 | ny u32
    count x ny x nx uint8 facies codes, row-major (row index = y)

Interface:
- encode(grids) → bytes
- decode(payload) → list[FaciesGrid]
- save(path, grids) → None
- load(path) → list[FaciesGrid]
"""

import struct
from typing import Sequence

import numpy as np

from src.primitives.errors import DatasetFormatError
from src.primitives.facies import FaciesGrid
from src.primitives.file_reader import FileReader
from src.primitives.file_writer import FileWriter

MAGIC = b"GGDS"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


class DatasetCodec:
    """Reads and writes facies grid stacks in the GGDS format"""

    def __init__(self):
        self.file_reader = FileReader()
        self.file_writer = FileWriter()

    def encode(self, grids: Sequence[FaciesGrid], nx: int = 0, ny: int = 0) -> bytes:
        """
        Serialize grids to bytes.

        Args:
            grids: Grids of identical shape
            nx, ny: Grid extent recorded when grids is empty

        Raises:
            DatasetFormatError: If grids differ in shape
        """
        if grids:
            ny, nx = grids[0].codes.shape
        stack = np.zeros((len(grids), ny, nx), dtype=np.uint8)
        for index, grid in enumerate(grids):
            if grid.codes.shape != (ny, nx):
                raise DatasetFormatError(
                    f"grid {index} has shape {grid.codes.shape}, expected {(ny, nx)}"
                )
            stack[index] = grid.codes
        return _HEADER.pack(MAGIC, VERSION, len(grids), nx, ny) + stack.tobytes(order="C")

    def decode(self, payload: bytes) -> list[FaciesGrid]:
        """
        Parse bytes produced by encode().

        Raises:
            DatasetFormatError: On wrong magic, unsupported version or truncation
        """
        if len(payload) < _HEADER.size:
            raise DatasetFormatError("dataset truncated: missing header")
        magic, version, count, nx, ny = _HEADER.unpack_from(payload, 0)
        if magic != MAGIC:
            raise DatasetFormatError(f"bad dataset magic {magic!r}")
        if version != VERSION:
            raise DatasetFormatError(f"unsupported dataset version {version}")
        expected = _HEADER.size + count * nx * ny
        if len(payload) != expected:
            raise DatasetFormatError(
                f"dataset size {len(payload)} bytes, expected {expected} for {count} grids of {nx}x{ny}"
            )
        stack = np.frombuffer(payload, dtype=np.uint8, offset=_HEADER.size).reshape(count, ny, nx)
        return [FaciesGrid(stack[k].copy()) for k in range(count)]

    def save(self, path: str, grids: Sequence[FaciesGrid]) -> None:
        self.file_writer.write_bytes(str(path), self.encode(grids))

    def load(self, path: str) -> list[FaciesGrid]:
        return self.decode(self.file_reader.read_bytes(str(path)))


def stack_codes(grids: Sequence[FaciesGrid]) -> np.ndarray:
    """(count, ny, nx) uint8 array of codes."""
    return np.stack([g.codes for g in grids]) if grids else np.zeros((0, 0, 0), dtype=np.uint8)


def stack_continuous(grids: Sequence[FaciesGrid]) -> np.ndarray:
    """(count, 1, ny, nx) float32 continuous codes, ready for the VAE."""
    return np.stack([g.to_continuous() for g in grids])[:, None, :, :]
