"""
CheckpointCodec Primitive

Binary checkpoint format (*.ldmc), little-endian:

    magic "LDMC" | version u32 | tensor count u32
    per tensor: name length u16 | name (UTF-8) | rank u8 | dims u32[rank] | float32 payload
    optimizer tensor count u32, then tensors in the same layout
    metadata length u32 | metadata JSON (UTF-8)

Tensors are written in sorted name order so identical state gives identical bytes.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from src.primitives.errors import CheckpointFormatError
from src.primitives.file_reader import FileReader
from src.primitives.file_writer import FileWriter

MAGIC = b"LDMC"
VERSION = 1


@dataclass
class Checkpoint:
    """Named float32 parameters, optimizer tensors and JSON metadata"""

    params: dict[str, np.ndarray] = field(default_factory=dict)
    optimizer: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def subset(self, prefix: str) -> dict[str, np.ndarray]:
        """Parameters under "<prefix>." with the prefix stripped."""
        head = prefix + "."
        return {k[len(head):]: v for k, v in self.params.items() if k.startswith(head)}


class _Cursor:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.payload):
            raise CheckpointFormatError("checkpoint truncated")
        values = struct.unpack_from(fmt, self.payload, self.offset)
        self.offset += size
        return values

    def take_bytes(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise CheckpointFormatError("checkpoint truncated")
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk


class CheckpointCodec:
    """Serializes Checkpoint objects to and from the LDMC format"""

    def __init__(self):
        self.file_reader = FileReader()
        self.file_writer = FileWriter()

    def _encode_tensors(self, tensors: dict[str, np.ndarray]) -> bytes:
        parts = [struct.pack("<I", len(tensors))]
        for name in sorted(tensors):
            array = np.ascontiguousarray(tensors[name], dtype="<f4")
            encoded = name.encode("utf-8")
            parts.append(struct.pack("<H", len(encoded)))
            parts.append(encoded)
            parts.append(struct.pack("<B", array.ndim))
            parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
            parts.append(array.tobytes(order="C"))
        return b"".join(parts)

    def _decode_tensors(self, cursor: _Cursor) -> dict[str, np.ndarray]:
        (count,) = cursor.take("<I")
        tensors = {}
        for _ in range(count):
            (name_len,) = cursor.take("<H")
            name = cursor.take_bytes(name_len).decode("utf-8")
            (rank,) = cursor.take("<B")
            dims = cursor.take(f"<{rank}I") if rank else ()
            size = int(np.prod(dims, dtype=np.int64)) if rank else 1
            raw = cursor.take_bytes(4 * size)
            tensors[name] = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(dims)
        return tensors

    def encode(self, checkpoint: Checkpoint) -> bytes:
        """Serialize a checkpoint to bytes."""
        metadata = json.dumps(checkpoint.metadata, sort_keys=True).encode("utf-8")
        return b"".join(
            [
                MAGIC,
                struct.pack("<I", VERSION),
                self._encode_tensors(checkpoint.params),
                self._encode_tensors(checkpoint.optimizer),
                struct.pack("<I", len(metadata)),
                metadata,
            ]
        )

    def decode(self, payload: bytes) -> Checkpoint:
        """
        Parse a checkpoint.

        Raises:
            CheckpointFormatError: On wrong magic, unsupported version, truncation
                or trailing bytes
        """
        if payload[:4] != MAGIC:
            raise CheckpointFormatError(f"bad checkpoint magic {payload[:4]!r}")
        cursor = _Cursor(payload)
        cursor.offset = 4
        (version,) = cursor.take("<I")
        if version != VERSION:
            raise CheckpointFormatError(f"unsupported checkpoint version {version}")
        params = self._decode_tensors(cursor)
        optimizer = self._decode_tensors(cursor)
        (meta_len,) = cursor.take("<I")
        try:
            metadata = json.loads(cursor.take_bytes(meta_len).decode("utf-8") or "{}")
        except json.JSONDecodeError as e:
            raise CheckpointFormatError(f"checkpoint metadata is not JSON: {e.msg}") from e
        if cursor.offset != len(payload):
            raise CheckpointFormatError("trailing bytes after checkpoint metadata")
        return Checkpoint(params=params, optimizer=optimizer, metadata=metadata)

    def save(self, path: str, checkpoint: Checkpoint) -> None:
        self.file_writer.write_bytes(str(path), self.encode(checkpoint))

    def load(self, path: str) -> Checkpoint:
        return self.decode(self.file_reader.read_bytes(str(path)))
