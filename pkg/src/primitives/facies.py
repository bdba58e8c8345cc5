"""
Facies Primitive

Facies grids and conditioning sets shared by the generator, the VAE, the
metrics and the flow simulator.

Grids are stored as arrays of shape (ny, nx): row index j runs along y and
column index i along x, so cell (i, j) is codes[j, i]. Flattening is row-major.
Codes: 0 = mud, 1 = levee, 2 = channel; their continuous values are -1, 0, +1.
"""

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from src.primitives.errors import ShapeMismatchError, UnknownFaciesError

MUD, LEVEE, CHANNEL = 0, 1, 2
FACIES_NAMES = ("mud", "levee", "channel")
CONTINUOUS_LEVELS = np.array([-1.0, 0.0, 1.0], dtype=np.float32)

# Well sites as fractions of the grid extent: (name, x fraction, y fraction, kind).
# Conditioning points sit at the same cells as the wells.
WELL_SITES = (
    ("I1", 0.15, 0.25, "injector"),
    ("I2", 0.15, 0.75, "injector"),
    ("I3", 0.50, 0.50, "injector"),
    ("P1", 0.85, 0.25, "producer"),
    ("P2", 0.85, 0.75, "producer"),
)


def site_cell(fraction_x: float, fraction_y: float, nx: int, ny: int) -> tuple[int, int]:
    """Cell (i, j) for a fractional position on an nx x ny grid."""
    return int(round(fraction_x * (nx - 1))), int(round(fraction_y * (ny - 1)))


@dataclass(frozen=True)
class FaciesGrid:
    """Integer-coded facies field of shape (ny, nx)."""

    codes: np.ndarray

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.ndim != 2 or codes.shape[0] < 1 or codes.shape[1] < 1:
            raise ShapeMismatchError(f"facies grid must be 2D and non-empty, got {codes.shape}")
        if codes.size and (codes.min() < 0 or codes.max() > 2):
            bad = sorted(set(np.unique(codes).tolist()) - {0, 1, 2})
            raise UnknownFaciesError(f"facies codes outside {{0,1,2}}: {bad}")
        object.__setattr__(self, "codes", codes.astype(np.uint8, copy=False))

    @property
    def nx(self) -> int:
        return int(self.codes.shape[1])

    @property
    def ny(self) -> int:
        return int(self.codes.shape[0])

    def at(self, i: int, j: int) -> int:
        return int(self.codes[j, i])

    def to_continuous(self) -> np.ndarray:
        """Continuous codes {-1, 0, +1} as float32, shape (ny, nx)."""
        return CONTINUOUS_LEVELS[self.codes]

    @classmethod
    def from_continuous(cls, values: np.ndarray) -> "FaciesGrid":
        """Discretize continuous values to the nearest facies level."""
        values = np.asarray(values, dtype=np.float64)
        return cls(np.clip(np.rint(values), -1, 1).astype(np.int64) + 1)

    def fractions(self) -> np.ndarray:
        """Areal fraction of mud, levee, channel."""
        return np.bincount(self.codes.ravel(), minlength=3)[:3] / self.codes.size

    def __eq__(self, other) -> bool:
        return isinstance(other, FaciesGrid) and np.array_equal(self.codes, other.codes)

    def __hash__(self) -> int:
        return hash(self.codes.tobytes())


@dataclass(frozen=True)
class ConditioningSet:
    """Hard data: (i, j, facies) triples."""

    points: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        points = tuple((int(i), int(j), int(f)) for i, j, f in self.points)
        seen = set()
        for i, j, f in points:
            if f not in (MUD, LEVEE, CHANNEL):
                raise UnknownFaciesError(f"conditioning facies {f} at ({i}, {j}) not in {{0,1,2}}")
            if (i, j) in seen:
                raise ValueError(f"duplicate conditioning cell ({i}, {j})")
            seen.add((i, j))
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def check_bounds(self, nx: int, ny: int) -> None:
        """Raise ValueError if any point lies outside an nx x ny grid."""
        outside = [(i, j) for i, j, _ in self.points if not (0 <= i < nx and 0 <= j < ny)]
        if outside:
            raise ValueError(f"conditioning points outside {nx}x{ny} grid: {outside}")

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(i, j, facies) as integer arrays."""
        if not self.points:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, empty
        arr = np.asarray(self.points, dtype=np.int64)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def mask(self, nx: int, ny: int) -> np.ndarray:
        """Selection matrix H as a (ny, nx) 0/1 float32 mask."""
        self.check_bounds(nx, ny)
        h = np.zeros((ny, nx), dtype=np.float32)
        ii, jj, _ = self.arrays()
        h[jj, ii] = 1.0
        return h

    def honored_by(self, grid: FaciesGrid) -> np.ndarray:
        """Boolean per point: grid facies equals conditioned facies."""
        ii, jj, ff = self.arrays()
        return grid.codes[jj, ii] == ff

    def to_dict(self) -> dict:
        return {"points": [{"i": i, "j": j, "facies": f} for i, j, f in self.points]}

    @classmethod
    def from_dict(cls, data: dict) -> "ConditioningSet":
        return cls(tuple((p["i"], p["j"], p["facies"]) for p in data.get("points", [])))

    @classmethod
    def from_points(cls, points: Optional[Iterable]) -> "ConditioningSet":
        if points is None:
            return cls()
        return cls(tuple((p["i"], p["j"], p["facies"]) if isinstance(p, dict) else p for p in points))

    @classmethod
    def at_well_sites(cls, nx: int, ny: int, facies: int = CHANNEL) -> "ConditioningSet":
        """Default hard data: the given facies at every well site."""
        return cls(
            tuple((*site_cell(fx, fy, nx, ny), facies) for _, fx, fy, _ in WELL_SITES)
        )
