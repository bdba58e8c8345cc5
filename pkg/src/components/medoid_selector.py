"""
MedoidSelector Component

Representative geomodels by k-means on flattened continuous facies codes.
Each cluster is represented by its member closest to the cluster centroid.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.cluster import KMeans

from src.primitives.errors import MetricsInputError
from src.primitives.facies import FaciesGrid
from src.primitives.logger import Logger

N_RESTARTS = 10
MAX_REINITIALIZATIONS = 5


@dataclass(frozen=True)
class MedoidSelection:
    indices: np.ndarray
    labels: np.ndarray
    distances: np.ndarray
    inertia: float

    def grids(self, grids: Sequence[FaciesGrid]) -> list[FaciesGrid]:
        return [grids[i] for i in self.indices]


def _features(grids: Sequence[FaciesGrid]) -> np.ndarray:
    return np.stack([g.to_continuous().reshape(-1) for g in grids]).astype(np.float64)


def kmeans_medoids(
    grids: Sequence[FaciesGrid],
    k: int,
    seed: int = 0,
    logger: Optional[Logger] = None,
) -> MedoidSelection:
    """
    Cluster grids and pick the member nearest each centroid.

    Args:
        grids: Facies grids of equal shape
        k: Number of clusters, 1 <= k <= len(grids); capped at the number of
            distinct grids
        seed: KMeans random_state (advanced on each re-initialization)

    Returns:
        MedoidSelection ordered by cluster label

    Raises:
        MetricsInputError: If k is out of range or a cluster stays empty after
            every re-initialization
    """
    if not 1 <= k <= len(grids):
        raise MetricsInputError(f"k={k} must lie in 1..{len(grids)}")
    x = _features(grids)
    distinct = len(np.unique(x, axis=0))
    if distinct < k:
        if logger:
            logger.warning("Fewer distinct grids than clusters", {"k": k, "distinct": distinct})
        k = distinct

    for attempt in range(MAX_REINITIALIZATIONS):
        model = KMeans(n_clusters=k, n_init=N_RESTARTS, random_state=seed + attempt).fit(x)
        labels = model.labels_
        counts = np.bincount(labels, minlength=k)
        if np.all(counts > 0):
            break
        if logger:
            logger.warning("Empty k-means cluster, re-initializing", {"attempt": attempt, "counts": counts})
    else:
        raise MetricsInputError(f"k-means left an empty cluster after {MAX_REINITIALIZATIONS} attempts")

    indices = np.empty(k, dtype=np.int64)
    distances = np.empty(k)
    for c in range(k):
        members = np.flatnonzero(labels == c)
        d = np.linalg.norm(x[members] - model.cluster_centers_[c], axis=1)
        best = int(np.argmin(d))
        indices[c] = members[best]
        distances[c] = d[best]
    return MedoidSelection(indices, labels, distances, float(model.inertia_))
