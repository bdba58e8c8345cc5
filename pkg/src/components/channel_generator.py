"""
ChannelGenerator Component

Object-based channel/levee/mud facies realizations honoring hard data.

Composes:
- FaciesGrid, ConditioningSet (primitive)
- SeedSplitter (primitive)
- Logger (primitive)

Each channel is a sine-perturbed straight line: along-axis coordinate s, axis
angle theta, perpendicular position offset + A*sin(2*pi*s/wavelength + phase).
The centerline is sampled densely and rasterized as a 4-connected supercover
line. Channel cells lie within (width - 1)/2 cells of the centerline; levee
cells lie within levee_halfwidth cells of that channel and outside it. All
levees are painted first and all channels on top, so every levee cell stays
next to a channel.

Conditioning: plain rejection sampling up to retry_budget configurations; then
up to repair_attempts fresh configurations in which, for each channel point
still uncovered, the nearest channel not yet moved is translated so its
centerline passes through that point. Once every channel is moved, a channel
holding one anchor is rotated and re-phased to pass through both points when
the line between them fits the orientation range. ConditioningInfeasibleError
if both stages fail.
"""

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
from scipy.ndimage import distance_transform_edt

from src.primitives.errors import ConditioningInfeasibleError, InvalidStyleError
from src.primitives.facies import CHANNEL, LEVEE, MUD, ConditioningSet, FaciesGrid
from src.primitives.logger import Logger
from src.primitives.seed_splitter import SeedSplitter

SAMPLE_STEP = 0.2


def _axis_angle(p: tuple[int, int], q: tuple[int, int]) -> float:
    """Direction of the line through p and q, folded into (-pi/2, pi/2]."""
    theta = float(np.arctan2(q[1] - p[1], q[0] - p[0]))
    if theta > np.pi / 2:
        theta -= np.pi
    elif theta <= -np.pi / 2:
        theta += np.pi
    return theta


@dataclass(frozen=True)
class ChannelStyle:
    """Grid extent plus (min, max) ranges for every channel object parameter"""

    nx: int = 32
    ny: int = 32
    n_channels: tuple[int, int] = (2, 4)
    width: tuple[float, float] = (2.0, 4.0)
    amplitude: tuple[float, float] = (1.0, 4.0)
    wavelength: tuple[float, float] = (12.0, 32.0)
    orientation: tuple[float, float] = (-0.35, 0.35)
    levee_halfwidth: tuple[float, float] = (1.0, 1.5)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise InvalidStyleError(f"grid must be at least 1x1, got {self.nx}x{self.ny}")
        for f in fields(self):
            if f.name in ("nx", "ny"):
                continue
            low, high = getattr(self, f.name)
            if low > high:
                raise InvalidStyleError(f"{f.name} range has min {low} > max {high}")
            object.__setattr__(self, f.name, (low, high))
        if self.n_channels[0] < 0:
            raise InvalidStyleError("n_channels must be non-negative")
        if self.width[0] < 1:
            raise InvalidStyleError(f"channel width must be >= 1 cell, got {self.width[0]}")
        if self.wavelength[0] <= 0:
            raise InvalidStyleError("wavelength must be positive")
        if self.levee_halfwidth[0] < 0 or self.amplitude[0] < 0:
            raise InvalidStyleError("amplitude and levee_halfwidth must be non-negative")

    @classmethod
    def from_config(cls, section: dict) -> "ChannelStyle":
        """Build from a geogen config section (extra keys ignored)."""
        names = {f.name for f in fields(cls)}
        values = {
            key: (tuple(value) if isinstance(value, (list, tuple)) else value)
            for key, value in section.items()
            if key in names
        }
        return cls(**values)


@dataclass
class ChannelObject:
    theta: float
    offset: float
    amplitude: float
    wavelength: float
    phase: float
    width: float
    levee_halfwidth: float
    anchors: tuple[float, ...] = ()

    def normal_position(self, s: np.ndarray) -> np.ndarray:
        return self.offset + self.amplitude * np.sin(2.0 * np.pi * s / self.wavelength + self.phase)


class ChannelGenerator:
    """Generates conditioned facies realizations for one ChannelStyle"""

    def __init__(
        self,
        style: ChannelStyle,
        retry_budget: int = 1000,
        repair_attempts: int = 100,
        logger: Optional[Logger] = None,
    ):
        self.style = style
        self.retry_budget = retry_budget
        self.repair_attempts = repair_attempts
        self.logger = logger
        self._center = ((style.nx - 1) / 2.0, (style.ny - 1) / 2.0)

    # object sampling

    def _sample_channel(self, rng: np.random.Generator) -> ChannelObject:
        s = self.style
        theta = rng.uniform(*s.orientation)
        reach = abs((s.nx - 1) / 2.0 * np.sin(theta)) + abs((s.ny - 1) / 2.0 * np.cos(theta))
        return ChannelObject(
            theta=theta,
            offset=rng.uniform(-reach, reach),
            amplitude=rng.uniform(*s.amplitude),
            wavelength=rng.uniform(*s.wavelength),
            phase=rng.uniform(0.0, 2.0 * np.pi),
            width=rng.uniform(*s.width),
            levee_halfwidth=rng.uniform(*s.levee_halfwidth),
        )

    def _sample_configuration(self, rng: np.random.Generator) -> list[ChannelObject]:
        low, high = self.style.n_channels
        count = int(rng.integers(low, high + 1))
        return [self._sample_channel(rng) for _ in range(count)]

    # rasterization

    def _axis_coordinates(self, channel: ChannelObject, i: float, j: float) -> tuple[float, float]:
        """(s, n) coordinates of a cell centre in the channel's frame."""
        dx, dy = i - self._center[0], j - self._center[1]
        c, s = np.cos(channel.theta), np.sin(channel.theta)
        return dx * c + dy * s, -dx * s + dy * c

    def centerline(self, channel: ChannelObject) -> np.ndarray:
        """Boolean (ny, nx) mask of the rasterized centerline."""
        nx, ny = self.style.nx, self.style.ny
        half_length = 0.5 * np.hypot(nx, ny) + channel.amplitude + 1.0
        s = np.arange(-half_length, half_length + SAMPLE_STEP, SAMPLE_STEP)
        if channel.anchors:
            s = np.union1d(s, channel.anchors)
        n = channel.normal_position(s)
        c, sn = np.cos(channel.theta), np.sin(channel.theta)
        i = np.rint(self._center[0] + s * c - n * sn).astype(np.int64)
        j = np.rint(self._center[1] + s * sn + n * c).astype(np.int64)

        # fill diagonal moves so the line stays 4-connected
        di, dj = np.diff(i), np.diff(j)
        diagonal = (di != 0) & (dj != 0)
        ii = np.concatenate([i, i[:-1][diagonal] + di[diagonal]])
        jj = np.concatenate([j, j[:-1][diagonal]])

        inside = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
        mask = np.zeros((ny, nx), dtype=bool)
        mask[jj[inside], ii[inside]] = True
        return mask

    @staticmethod
    def _band(core: np.ndarray, radius: float) -> np.ndarray:
        if not core.any():
            return np.zeros_like(core)
        return distance_transform_edt(~core) <= radius

    def channel_mask(self, channel: ChannelObject) -> np.ndarray:
        return self._band(self.centerline(channel), (channel.width - 1.0) / 2.0)

    def paint(self, channels: list[ChannelObject]) -> FaciesGrid:
        """Rasterize a configuration into facies codes."""
        shape = (self.style.ny, self.style.nx)
        channel_union = np.zeros(shape, dtype=bool)
        levee_union = np.zeros(shape, dtype=bool)
        for channel in channels:
            band = self.channel_mask(channel)
            levee_union |= self._band(band, channel.levee_halfwidth) & ~band
            channel_union |= band
        codes = np.full(shape, MUD, dtype=np.uint8)
        codes[levee_union] = LEVEE
        codes[channel_union] = CHANNEL
        return FaciesGrid(codes)

    # conditioning

    def _channel_points_covered(self, channels, cond: ConditioningSet) -> bool:
        ii, jj, ff = cond.arrays()
        wanted = ff == CHANNEL
        if not wanted.any():
            return True
        union = np.zeros((self.style.ny, self.style.nx), dtype=bool)
        for channel in channels:
            union |= self.channel_mask(channel)
        return bool(union[jj[wanted], ii[wanted]].all())

    def _aim_through(self, channel: ChannelObject, p: tuple[int, int], q: tuple[int, int]) -> bool:
        """
        Rotate and re-phase a channel so its centerline passes through p and q.

        The axis takes the direction p -> q and the phase makes the sine term
        equal at both points. Returns False when that direction falls outside
        the style's orientation range.
        """
        theta = _axis_angle(p, q)
        low, high = self.style.orientation
        if not low <= theta <= high:
            return False
        channel.theta = theta
        s1, n1 = self._axis_coordinates(channel, *p)
        s2, _ = self._axis_coordinates(channel, *q)
        channel.phase = 0.5 * np.pi - np.pi * (s1 + s2) / channel.wavelength
        channel.offset = n1 - channel.amplitude * np.sin(2.0 * np.pi * s1 / channel.wavelength + channel.phase)
        channel.anchors = (s1, s2)
        return True

    def _anchor(self, channels: list[ChannelObject], cond: ConditioningSet, rng) -> list[ChannelObject]:
        """
        Move channels through uncovered channel points.

        Each point takes the nearest channel not yet moved and translates it.
        When none is left, a channel holding a single anchor is re-aimed
        through its anchor and the new point.
        """
        single: dict[int, tuple[int, int]] = {}
        anchored: set[int] = set()
        for i, j, facies in cond:
            if facies != CHANNEL:
                continue
            covered = any(self.channel_mask(ch)[j, i] for ch in channels)
            if covered:
                continue
            best, best_shift, best_s = None, None, None
            for index, channel in enumerate(channels):
                if index in anchored:
                    continue
                s_p, n_p = self._axis_coordinates(channel, i, j)
                shift = n_p - float(channel.normal_position(np.array([s_p]))[0])
                if best is None or abs(shift) < abs(best_shift):
                    best, best_shift, best_s = index, shift, s_p
            if best is None and len(channels) < self.style.n_channels[1]:
                channels.append(self._sample_channel(rng))
                best = len(channels) - 1
                s_p, n_p = self._axis_coordinates(channels[best], i, j)
                best_shift = n_p - float(channels[best].normal_position(np.array([s_p]))[0])
                best_s = s_p
            if best is None:
                partners = sorted(single, key=lambda k: abs(_axis_angle(single[k], (i, j))))
                aimed = next((k for k in partners if self._aim_through(channels[k], single[k], (i, j))), None)
                if aimed is None:
                    return channels
                del single[aimed]
                continue
            channels[best].offset += best_shift
            channels[best].anchors = (best_s,)
            anchored.add(best)
            single[best] = (i, j)
        return channels

    def generate(self, cond: ConditioningSet, seed: int) -> FaciesGrid:
        """
        One realization honoring every conditioning point.

        Args:
            cond: Hard data (checked against the grid bounds)
            seed: Realization seed; output is a pure function of (style, cond, seed)

        Returns:
            FaciesGrid: (ny, nx) facies codes

        Raises:
            ValueError: If cond lies outside the grid
            ConditioningInfeasibleError: If no configuration honors cond
        """
        cond.check_bounds(self.style.nx, self.style.ny)
        rng = SeedSplitter.generator(seed)

        for _ in range(max(self.retry_budget, 1)):
            channels = self._sample_configuration(rng)
            if not self._channel_points_covered(channels, cond):
                continue
            grid = self.paint(channels)
            if cond.honored_by(grid).all():
                return grid

        for attempt in range(self.repair_attempts):
            channels = self._anchor(self._sample_configuration(rng), cond, rng)
            grid = self.paint(channels)
            if cond.honored_by(grid).all():
                if self.logger:
                    self.logger.debug("Conditioning repaired", {"seed": seed, "attempt": attempt})
                return grid

        raise ConditioningInfeasibleError(
            f"no channel configuration honors {len(cond)} conditioning points "
            f"after {self.retry_budget} draws and {self.repair_attempts} repairs (seed {seed})"
        )


def generate_realization(
    style: ChannelStyle,
    cond: ConditioningSet,
    seed: int,
    retry_budget: int = 1000,
    repair_attempts: int = 100,
) -> FaciesGrid:
    """Convenience wrapper around ChannelGenerator.generate."""
    return ChannelGenerator(style, retry_budget, repair_attempts).generate(cond, seed)
