"""
RockFluid Component

Per-facies rock properties, fluid properties and Corey relative permeability.

Units: porosity fraction, permeability mD, viscosity cP, pressure bar,
compressibility 1/bar.
"""

from dataclasses import dataclass, fields, replace
from typing import Sequence, Union

import numpy as np

from src.primitives.errors import RelpermRangeError, RockPropertyError, UnknownFaciesError
from src.primitives.facies import FaciesGrid

# Saturations within this distance of an endpoint are accepted by relperm()
SATURATION_EPS = 1e-9


@dataclass(frozen=True)
class RockFluidProps:
    """Rock properties per facies (mud, levee, channel) plus fluid constants"""

    porosity: tuple[float, float, float] = (0.05, 0.15, 0.2)
    permeability: tuple[float, float, float] = (50.0, 400.0, 2500.0)
    mu_w: float = 0.31
    mu_o: float = 1.09
    swc: float = 0.1
    sor: float = 0.2
    nw: float = 2.0
    no: float = 2.0
    krw_end: float = 0.4
    kro_end: float = 1.0
    sw_init: float = 0.1
    p_init: float = 310.0
    c_w: float = 4.5e-5
    c_o: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "porosity", tuple(float(v) for v in self.porosity))
        object.__setattr__(self, "permeability", tuple(float(v) for v in self.permeability))
        if len(self.porosity) != 3 or len(self.permeability) != 3:
            raise RockPropertyError("porosity and permeability need one value per facies")
        if not all(0.0 < p < 1.0 for p in self.porosity):
            raise RockPropertyError(f"porosity must lie in (0, 1), got {self.porosity}")
        if not all(k > 0.0 for k in self.permeability):
            raise RockPropertyError(f"permeability must be positive, got {self.permeability}")
        if self.mu_w <= 0 or self.mu_o <= 0:
            raise RockPropertyError("viscosities must be positive")
        if self.c_w < 0 or self.c_o < 0:
            raise RockPropertyError("compressibilities must be non-negative")
        if not (0.0 <= self.swc < 1.0 - self.sor <= 1.0):
            raise RelpermRangeError(f"need 0 <= Swc < 1 - Sor <= 1, got Swc={self.swc}, Sor={self.sor}")
        if not (self.swc <= self.sw_init <= 1.0 - self.sor):
            raise RelpermRangeError(f"initial Sw {self.sw_init} outside [Swc, 1 - Sor]")

    @classmethod
    def from_config(cls, section: dict) -> "RockFluidProps":
        names = {f.name for f in fields(cls)}
        return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in section.items() if k in names})

    def with_facies_properties(
        self, porosity: Sequence[float], permeability: Sequence[float]
    ) -> "RockFluidProps":
        """Copy with per-facies porosity and permeability replaced."""
        return replace(self, porosity=tuple(porosity), permeability=tuple(permeability))

    @property
    def movable_range(self) -> float:
        return 1.0 - self.swc - self.sor


def assign_properties(
    grid: Union[FaciesGrid, np.ndarray], props: RockFluidProps
) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-cell porosity and permeability by facies lookup.

    Returns:
        (phi, k): float64 arrays of shape (ny, nx)

    Raises:
        UnknownFaciesError: If a code is outside {0, 1, 2}
    """
    codes = grid.codes if isinstance(grid, FaciesGrid) else np.asarray(grid)
    if codes.size and (codes.min() < 0 or codes.max() > 2):
        raise UnknownFaciesError(f"unknown facies codes {sorted(set(np.unique(codes).tolist()) - {0, 1, 2})}")
    index = codes.astype(np.int64)
    return np.asarray(props.porosity)[index], np.asarray(props.permeability)[index]


def effective_saturation(sw, props: RockFluidProps) -> np.ndarray:
    return np.clip((np.asarray(sw, dtype=np.float64) - props.swc) / props.movable_range, 0.0, 1.0)


def relperm(sw, props: RockFluidProps) -> tuple[np.ndarray, np.ndarray]:
    """
    Corey relative permeabilities.

    krw = krw_end * Se^nw, kro = kro_end * (1 - Se)^no, Se = (Sw - Swc) / (1 - Swc - Sor)

    Raises:
        RelpermRangeError: If any Sw lies outside [Swc, 1 - Sor]
    """
    sw = np.asarray(sw, dtype=np.float64)
    if np.any(sw < props.swc - SATURATION_EPS) or np.any(sw > 1.0 - props.sor + SATURATION_EPS):
        raise RelpermRangeError(f"Sw outside [{props.swc}, {1.0 - props.sor}]")
    return relperm_clipped(sw, props)


def relperm_clipped(sw, props: RockFluidProps) -> tuple[np.ndarray, np.ndarray]:
    """Corey curves with Se clipped to [0, 1] (used inside the solver)."""
    se = effective_saturation(sw, props)
    return props.krw_end * se ** props.nw, props.kro_end * (1.0 - se) ** props.no


def mobilities(sw, props: RockFluidProps) -> tuple[np.ndarray, np.ndarray]:
    """Phase mobilities kr / mu in 1/cP."""
    krw, kro = relperm_clipped(sw, props)
    return krw / props.mu_w, kro / props.mu_o


def fractional_flow(sw, props: RockFluidProps) -> np.ndarray:
    lam_w, lam_o = mobilities(sw, props)
    total = lam_w + lam_o
    return np.divide(lam_w, total, out=np.zeros_like(total), where=total > 0)


def max_fractional_flow_slope(props: RockFluidProps, samples: int = 2001) -> float:
    """max dfw/dSw over the movable range, by finite differences."""
    sw = np.linspace(props.swc, 1.0 - props.sor, samples)
    slope = np.diff(fractional_flow(sw, props)) / np.diff(sw)
    return float(np.max(np.abs(slope)))
