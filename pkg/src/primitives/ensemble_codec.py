"""
EnsembleCodec Primitive

Binary ensemble format (*.hmv), little-endian:

    magic "HMVS" | version u32 | N_e u32 | member length u32
    N_e x length float64 values, row-major (one member per row)
"""

import struct

import numpy as np

from src.primitives.errors import EnsembleError
from src.primitives.file_reader import FileReader
from src.primitives.file_writer import FileWriter

MAGIC = b"HMVS"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class EnsembleCodec:
    """Reads and writes (N_e, length) float64 member matrices"""

    def __init__(self):
        self.file_reader = FileReader()
        self.file_writer = FileWriter()

    def encode(self, members: np.ndarray) -> bytes:
        members = np.ascontiguousarray(members, dtype="<f8")
        if members.ndim != 2:
            raise EnsembleError(f"ensemble must be 2D (members, length), got {members.shape}")
        return _HEADER.pack(MAGIC, VERSION, *members.shape) + members.tobytes(order="C")

    def decode(self, payload: bytes) -> np.ndarray:
        if len(payload) < _HEADER.size:
            raise EnsembleError("ensemble file truncated: missing header")
        magic, version, n_e, length = _HEADER.unpack_from(payload, 0)
        if magic != MAGIC or version != VERSION:
            raise EnsembleError(f"bad ensemble header {magic!r} v{version}")
        if len(payload) != _HEADER.size + 8 * n_e * length:
            raise EnsembleError(f"ensemble payload size does not match {n_e}x{length}")
        return np.frombuffer(payload, dtype="<f8", offset=_HEADER.size).reshape(n_e, length).copy()

    def save(self, path: str, members: np.ndarray) -> None:
        self.file_writer.write_bytes(str(path), self.encode(members))

    def load(self, path: str) -> np.ndarray:
        return self.decode(self.file_reader.read_bytes(str(path)))
