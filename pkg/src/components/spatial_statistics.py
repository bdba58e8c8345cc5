"""
SpatialStatistics Component

Validation statistics for sets of facies grids and simulated series.

Interface:
- two_point_probability(grids, facies, direction, max_lag) → (curves, envelope)
- ssim(a, b) → float
- percentile_curves(series, times, percentiles) → PercentileBand
- hard_data_accuracy(grids, cond) → float

Two-point estimator: P(facies(p + l*dir) = f | facies(p) = f) over all pairs
whose both cells lie in the grid; lag 0 is 1 by construction and lags whose
reference count is zero report 0. SSIM runs on continuous codes {-1, 0, 1}
with a 7x7 uniform window, dynamic range 2 and the 0.01/0.03 stabilizers.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from skimage.metrics import structural_similarity

from src.primitives.errors import MetricsInputError
from src.primitives.facies import ConditioningSet, FaciesGrid

SSIM_WINDOW = 7
SSIM_DATA_RANGE = 2.0
DIRECTIONS = ((1, 0), (0, 1), (1, 1))

GridSet = Union[Sequence[FaciesGrid], np.ndarray]


@dataclass(frozen=True)
class TwoPointCurve:
    facies: int
    direction: tuple[int, int]
    lags: np.ndarray
    prob: np.ndarray

    def to_rows(self) -> list[list]:
        return [[int(lag), float(p)] for lag, p in zip(self.lags, self.prob)]


@dataclass(frozen=True)
class TwoPointEnvelope:
    facies: int
    direction: tuple[int, int]
    lags: np.ndarray
    mean: np.ndarray
    low: np.ndarray
    high: np.ndarray

    def inside_fraction(self, curve: np.ndarray) -> float:
        """Fraction of lags at which curve lies within [low, high]."""
        curve = np.asarray(curve)
        inside = (curve >= self.low - 1e-12) & (curve <= self.high + 1e-12)
        return float(np.mean(inside))


@dataclass(frozen=True)
class PercentileBand:
    times: np.ndarray
    p10: np.ndarray
    p50: np.ndarray
    p90: np.ndarray

    def to_rows(self) -> list[list[float]]:
        return [[float(t), float(a), float(b), float(c)] for t, a, b, c in zip(self.times, self.p10, self.p50, self.p90)]

    def bracket_fraction(self, values: np.ndarray) -> float:
        values = np.asarray(values)
        return float(np.mean((values >= self.p10) & (values <= self.p90)))


def _codes(grids: GridSet) -> np.ndarray:
    if isinstance(grids, np.ndarray):
        codes = grids if grids.ndim == 3 else grids[None]
    else:
        if len(grids) == 0:
            raise MetricsInputError("empty grid set")
        codes = np.stack([g.codes if isinstance(g, FaciesGrid) else np.asarray(g) for g in grids])
    if codes.shape[0] == 0:
        raise MetricsInputError("empty grid set")
    return codes


def _lag_probability(is_f: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Per-grid conditional probability for one shift (dx, dy) >= 0."""
    _, ny, nx = is_f.shape
    ref = is_f[:, : ny - dy, : nx - dx]
    other = is_f[:, dy:, dx:]
    n_ref = ref.sum(axis=(1, 2))
    n_both = (ref & other).sum(axis=(1, 2))
    return np.divide(n_both, n_ref, out=np.zeros(len(n_ref)), where=n_ref > 0)


def two_point_probability(
    grids: GridSet,
    facies: int,
    direction: tuple[int, int],
    max_lag: int,
) -> tuple[list[TwoPointCurve], TwoPointEnvelope]:
    """
    Per-grid two-point curves for one facies and direction, plus their envelope.

    Args:
        grids: FaciesGrids or an (N, ny, nx) code array
        facies: Facies code
        direction: Lag step (dx, dy) with non-negative components
        max_lag: Largest lag, smaller than the grid extent along the direction

    Returns:
        (curves, envelope) with envelope mean/min/max across grids

    Raises:
        MetricsInputError: On an empty set, a bad direction or a lag too long
    """
    codes = _codes(grids)
    dx, dy = int(direction[0]), int(direction[1])
    if dx < 0 or dy < 0 or (dx == 0 and dy == 0):
        raise MetricsInputError(f"direction must be a non-negative, non-zero step, got {direction}")
    _, ny, nx = codes.shape
    if max_lag < 0 or max_lag * dx >= nx or max_lag * dy >= ny:
        raise MetricsInputError(f"max_lag {max_lag} along {direction} exceeds the {nx}x{ny} grid")

    is_f = codes == facies
    probs = np.ones((codes.shape[0], max_lag + 1))
    for lag in range(1, max_lag + 1):
        probs[:, lag] = _lag_probability(is_f, lag * dx, lag * dy)

    lags = np.arange(max_lag + 1)
    curves = [TwoPointCurve(int(facies), (dx, dy), lags, p) for p in probs]
    envelope = TwoPointEnvelope(
        int(facies), (dx, dy), lags, probs.mean(axis=0), probs.min(axis=0), probs.max(axis=0)
    )
    return curves, envelope


def _image(x) -> np.ndarray:
    if isinstance(x, FaciesGrid):
        return x.to_continuous().astype(np.float64)
    return np.asarray(x, dtype=np.float64)


def ssim(a, b) -> float:
    """
    Mean windowed SSIM of two images or facies grids.

    Raises:
        MetricsInputError: On a shape mismatch or an image smaller than the window
    """
    x, y = _image(a), _image(b)
    if x.shape != y.shape:
        raise MetricsInputError(f"SSIM inputs differ in shape: {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise MetricsInputError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {x.shape}")
    value = structural_similarity(
        x,
        y,
        win_size=SSIM_WINDOW,
        data_range=SSIM_DATA_RANGE,
        gaussian_weights=False,
        use_sample_covariance=True,
        K1=0.01,
        K2=0.03,
    )
    return float(np.clip(value, -1.0, 1.0))


def percentile_curves(
    series: np.ndarray,
    times: np.ndarray,
    percentiles: Sequence[float] = (10.0, 50.0, 90.0),
) -> PercentileBand:
    """
    Per-time empirical percentiles over realizations.

    Args:
        series: (n_realizations, n_times) values
        times: (n_times,) time grid shared by every realization
        percentiles: Low, mid and high percentiles

    Raises:
        MetricsInputError: On an empty set or a time-grid mismatch
    """
    values = np.asarray(series, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] == 0:
        raise MetricsInputError("no realizations for percentile curves")
    times = np.asarray(times, dtype=np.float64)
    if values.shape[1] != times.size:
        raise MetricsInputError(f"series have {values.shape[1]} steps, time grid has {times.size}")
    low, mid, high = np.percentile(values, sorted(percentiles), axis=0, method="linear")
    return PercentileBand(times, low, mid, high)


def hard_data_accuracy(grids: GridSet, cond: ConditioningSet) -> float:
    """Fraction of (grid, point) pairs whose facies matches the conditioning."""
    codes = _codes(grids)
    if len(cond) == 0:
        return 1.0
    _, ny, nx = codes.shape
    cond.check_bounds(nx, ny)
    ii, jj, ff = cond.arrays()
    return float(np.mean(codes[:, jj, ii] == ff[None, :]))


def consecutive_ssim(images: Sequence) -> np.ndarray:
    return np.array([ssim(a, b) for a, b in zip(images[:-1], images[1:])])


def anchored_ssim(images: Sequence) -> np.ndarray:
    return np.array([ssim(images[0], b) for b in images])
