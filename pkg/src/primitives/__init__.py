"""Primitives package for ldm-geomodel."""

from src.primitives.checkpoint_codec import Checkpoint, CheckpointCodec
from src.primitives.config_loader import ConfigLoader
from src.primitives.dataset_codec import DatasetCodec
from src.primitives.ensemble_codec import EnsembleCodec
from src.primitives.facies import ConditioningSet, FaciesGrid
from src.primitives.json_validator import JSONValidator
from src.primitives.path_resolver import PathResolver
from src.primitives.seed_splitter import SeedSplitter
from src.primitives.tensor import Tensor

__all__ = [
    "Checkpoint",
    "CheckpointCodec",
    "ConditioningSet",
    "ConfigLoader",
    "DatasetCodec",
    "EnsembleCodec",
    "FaciesGrid",
    "JSONValidator",
    "PathResolver",
    "SeedSplitter",
    "Tensor",
]
