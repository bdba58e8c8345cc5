"""
DatasetBuilder Feature

Builds the conditioned training set of facies realizations and its
train/validation/test partition.

Composes:
- ChannelGenerator (component)
- DatasetCodec, FileWriter, FileReader, JSONValidator (primitive)
- SeedSplitter, Logger (primitive)

Realization k is generated with its own seed hash_seed(seed, "realization-k"),
so the set is identical for any worker count. The partition is a seeded
permutation cut at round(n * train) and round(n * val).

Interface:
- split_indices(n_total, split, seed) → dict[str, list[int]]
- build_dataset(style, cond, n_total, split, seed, workers=1) → Dataset
- Dataset.save(directory) / Dataset.load(directory)
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from src.components.channel_generator import ChannelGenerator, ChannelStyle
from src.primitives.dataset_codec import DatasetCodec
from src.primitives.errors import DatasetFormatError, InvalidSplitError
from src.primitives.facies import ConditioningSet, FaciesGrid
from src.primitives.file_reader import FileReader
from src.primitives.file_writer import FileWriter
from src.primitives.json_validator import JSONValidator
from src.primitives.logger import Logger
from src.primitives.seed_splitter import SeedSplitter

PARTITIONS = ("train", "val", "test")
MIN_REALIZATIONS = 10
SPLIT_STREAM = 7

DATASET_FILE = "dataset.ggds"
SPLIT_FILE = "split.json"
CONDITIONING_FILE = "conditioning.json"


@dataclass
class Dataset:
    grids: list[FaciesGrid]
    split: dict[str, list[int]]
    cond: ConditioningSet
    seed: int = 0

    def partition(self, name: str) -> list[FaciesGrid]:
        return [self.grids[i] for i in self.split[name]]

    @property
    def train(self) -> list[FaciesGrid]:
        return self.partition("train")

    @property
    def val(self) -> list[FaciesGrid]:
        return self.partition("val")

    @property
    def test(self) -> list[FaciesGrid]:
        return self.partition("test")

    def save(self, directory: str) -> dict[str, str]:
        """Write dataset.ggds, split.json and conditioning.json; return their paths."""
        directory = Path(directory)
        writer = FileWriter()
        paths = {
            "dataset": str(directory / DATASET_FILE),
            "split": str(directory / SPLIT_FILE),
            "conditioning": str(directory / CONDITIONING_FILE),
        }
        DatasetCodec().save(paths["dataset"], self.grids)
        writer.write(paths["split"], {"seed": self.seed, **self.split})
        writer.write(paths["conditioning"], self.cond.to_dict())
        return paths

    @classmethod
    def load(cls, directory: str) -> "Dataset":
        """
        Read a dataset directory written by save().

        Raises:
            FileNotFoundError: If a file is missing
            DatasetFormatError: On a malformed dataset or split file
        """
        directory = Path(directory)
        reader = FileReader()
        validator = JSONValidator()
        grids = DatasetCodec().load(str(directory / DATASET_FILE))
        split_data = reader.read(str(directory / SPLIT_FILE))
        ok, errors = validator.validate_split(split_data)
        if not ok:
            raise DatasetFormatError(f"invalid split file: {errors}")
        split = {name: [int(i) for i in split_data[name]] for name in PARTITIONS}
        if any(i >= len(grids) for name in PARTITIONS for i in split[name]):
            raise DatasetFormatError(f"split references realizations beyond {len(grids)}")
        cond_path = directory / CONDITIONING_FILE
        cond = ConditioningSet.from_dict(reader.read(str(cond_path))) if cond_path.exists() else ConditioningSet(())
        return cls(grids, split, cond, int(split_data.get("seed", 0)))


def realization_seed(seed: int, index: int) -> int:
    return SeedSplitter.hash_seed(seed, f"realization-{index}")


def split_counts(n_total: int, split: Sequence[float]) -> tuple[int, int, int]:
    """
    Partition sizes for n_total realizations.

    Raises:
        InvalidSplitError: If fractions are not three non-negative values summing to 1
    """
    if len(split) != 3 or any(f < 0 for f in split):
        raise InvalidSplitError(f"split must be three non-negative fractions, got {list(split)}")
    if abs(sum(split) - 1.0) > 1e-9:
        raise InvalidSplitError(f"split fractions sum to {sum(split)}, expected 1")
    n_train = int(round(n_total * split[0]))
    n_val = int(round(n_total * split[1]))
    n_val = min(n_val, n_total - n_train)
    return n_train, n_val, n_total - n_train - n_val


def split_indices(n_total: int, split: Sequence[float], seed: int) -> dict[str, list[int]]:
    """Disjoint index lists covering range(n_total), deterministic in seed."""
    n_train, n_val, _ = split_counts(n_total, split)
    order = SeedSplitter.generator(seed, SPLIT_STREAM).permutation(n_total)
    return {
        "train": sorted(order[:n_train].tolist()),
        "val": sorted(order[n_train:n_train + n_val].tolist()),
        "test": sorted(order[n_train + n_val:].tolist()),
    }


def _generate_chunk(args) -> list[np.ndarray]:
    style, cond, seeds, retry_budget, repair_attempts = args
    generator = ChannelGenerator(style, retry_budget, repair_attempts)
    return [generator.generate(cond, s).codes for s in seeds]


def generate_many(
    style: ChannelStyle,
    cond: ConditioningSet,
    seeds: Sequence[int],
    workers: int = 1,
    retry_budget: int = 1000,
    repair_attempts: int = 100,
) -> list[FaciesGrid]:
    """Realizations for each seed, in seed order, optionally across processes."""
    seeds = list(seeds)
    if workers <= 1 or len(seeds) < 2:
        codes = _generate_chunk((style, cond, seeds, retry_budget, repair_attempts))
    else:
        chunks = [seeds[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(
                executor.map(_generate_chunk, [(style, cond, c, retry_budget, repair_attempts) for c in chunks])
            )
        codes = [None] * len(seeds)
        for k, chunk in enumerate(results):
            codes[k::workers] = chunk
    return [FaciesGrid(c) for c in codes]


def build_dataset(
    style: ChannelStyle,
    cond: ConditioningSet,
    n_total: int,
    split: Sequence[float] = (0.7, 0.2, 0.1),
    seed: int = 0,
    workers: int = 1,
    retry_budget: int = 1000,
    repair_attempts: int = 100,
    logger: Optional[Logger] = None,
) -> Dataset:
    """
    Generate n_total conditioned realizations and partition them.

    Args:
        style: Channel object parameters
        cond: Hard data every realization honors
        n_total: Number of realizations (at least 10)
        split: (train, val, test) fractions summing to 1
        seed: Dataset seed
        workers: Process count for generation

    Returns:
        Dataset with disjoint train/val/test index lists

    Raises:
        InvalidSplitError: On bad fractions or n_total < 10
        ConditioningInfeasibleError: If a realization cannot honor cond
    """
    if n_total < MIN_REALIZATIONS:
        raise InvalidSplitError(f"n_total must be at least {MIN_REALIZATIONS}, got {n_total}")
    partition = split_indices(n_total, split, seed)
    cond.check_bounds(style.nx, style.ny)

    if logger:
        logger.info("Building dataset", {"n_total": n_total, "nx": style.nx, "ny": style.ny, "workers": workers})
    seeds = [realization_seed(seed, k) for k in range(n_total)]
    grids = generate_many(style, cond, seeds, workers, retry_budget, repair_attempts)
    if logger:
        channel_fraction = float(np.mean([g.fractions()[2] for g in grids]))
        logger.info(
            "Dataset built",
            {**{name: len(idx) for name, idx in partition.items()}, "channel_fraction": channel_fraction},
        )
    return Dataset(grids, partition, cond, seed)
