"""SeedSplitter Primitive

Deterministic seed derivation.

- stage_seed(global_seed, stage): sha256 of "<global_seed>:<stage>", first 8
  bytes little-endian, masked to 63 bits.
- generator(seed, *keys): numpy PCG64 generator over SeedSequence([seed, *keys]),
  one independent stream per (seed, keys) tuple.
"""

import hashlib

import numpy as np


class SeedSplitter:
    """Derive per-stage seeds and per-item random streams from one seed"""

    MASK_63 = (1 << 63) - 1

    def __init__(self, global_seed: int):
        self.global_seed = int(global_seed)

    @staticmethod
    def hash_seed(global_seed: int, stage: str) -> int:
        digest = hashlib.sha256(f"{int(global_seed)}:{stage}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little") & SeedSplitter.MASK_63

    def stage_seed(self, stage: str) -> int:
        """Seed for a named pipeline stage (e.g. "gen-data", "hm")."""
        return self.hash_seed(self.global_seed, stage)

    def stage_seeds(self, stages: list[str]) -> dict[str, int]:
        return {stage: self.stage_seed(stage) for stage in stages}

    @staticmethod
    def generator(seed: int, *keys: int) -> np.random.Generator:
        """Independent generator for (seed, *keys); identical on every run."""
        entropy = [int(seed) & SeedSplitter.MASK_63] + [int(k) & SeedSplitter.MASK_63 for k in keys]
        return np.random.default_rng(np.random.SeedSequence(entropy))
