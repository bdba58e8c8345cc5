"""
Observations Component

Fixed-order observation vectors drawn from a WellSeries.

Ordering is quantity-major: for each (well, phase) key in the layout, all
observation times in increasing order. The default keys are producer oil and
water rates followed by injector water rates, giving 7 quantities; at 100-day
spacing over 1000 days that is 70 values.

Interface:
- ObservationLayout.stack(values: dict) → np.ndarray
- ObservationLayout.unstack(vector) → dict
- extract_observations(series, every, until, layout=None) → (vector, layout)
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.components.impes_solver import WellSeries
from src.components.well_model import INJECTOR, PRODUCER
from src.primitives.errors import MissingReportTimeError, ShapeMismatchError

TIME_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ObservationLayout:
    keys: tuple[tuple[str, str], ...]
    times: tuple[float, ...]

    @property
    def size(self) -> int:
        return len(self.keys) * len(self.times)

    def stack(self, values: dict[tuple[str, str], np.ndarray]) -> np.ndarray:
        if not self.times:
            return np.zeros(0, dtype=np.float64)
        return np.concatenate([np.asarray(values[key], dtype=np.float64) for key in self.keys])

    def unstack(self, vector: np.ndarray) -> dict[tuple[str, str], np.ndarray]:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.size,):
            raise ShapeMismatchError(f"observation vector of length {vector.size}, layout needs {self.size}")
        n = len(self.times)
        return {key: vector[k * n:(k + 1) * n].copy() for k, key in enumerate(self.keys)}

    def to_dict(self) -> dict:
        """Ordering header written next to observation files."""
        return {
            "order": "quantity-major",
            "keys": [{"well": w, "phase": p} for w, p in self.keys],
            "times": list(self.times),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ObservationLayout":
        return cls(tuple((k["well"], k["phase"]) for k in data["keys"]), tuple(float(t) for t in data["times"]))

    def labels(self) -> list[str]:
        return [f"{w}:{p}@{t:g}" for w, p in self.keys for t in self.times]


def default_keys(series: WellSeries) -> tuple[tuple[str, str], ...]:
    producers = [w for w in series.wells if series.kinds[w] == PRODUCER]
    injectors = [w for w in series.wells if series.kinds[w] == INJECTOR]
    keys = []
    for w in producers:
        keys += [(w, "oil_production"), (w, "water_production")]
    keys += [(w, "water_injection") for w in injectors]
    return tuple(keys)


def observation_times(every: float, until: float) -> tuple[float, ...]:
    if until <= 0:
        return ()
    count = int(np.floor(until / every + 1e-9))
    return tuple(every * (k + 1) for k in range(count))


def extract_observations(
    series: WellSeries,
    every: float,
    until: float,
    keys: Optional[Sequence[tuple[str, str]]] = None,
) -> tuple[np.ndarray, ObservationLayout]:
    """
    Sample rates at every, 2*every, ..., until.

    Args:
        series: Simulated well series
        every: Observation spacing in days
        until: Last observation time in days (0 gives an empty vector)
        keys: (well, phase) pairs; producers' oil and water then injectors' water by default

    Returns:
        (vector, layout)

    Raises:
        MissingReportTimeError: If a requested time is not a report time
    """
    layout = ObservationLayout(tuple(keys) if keys is not None else default_keys(series), observation_times(every, until))
    indices = []
    for t in layout.times:
        hit = np.flatnonzero(np.isclose(series.times, t, rtol=0.0, atol=TIME_TOLERANCE))
        if hit.size == 0:
            raise MissingReportTimeError(f"no report at t={t} days")
        indices.append(int(hit[0]))
    values = {key: series.rate(*key)[indices] for key in layout.keys}
    return layout.stack(values), layout
