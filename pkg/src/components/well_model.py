"""
WellModel Component

BHP-controlled vertical wells and the Peaceman well index.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.primitives.errors import WellGeometryError
from src.primitives.facies import WELL_SITES, site_cell

INJECTOR, PRODUCER = "injector", "producer"


@dataclass(frozen=True)
class WellSpec:
    name: str
    i: int
    j: int
    kind: str
    bhp: float
    rw: float = 0.1

    def __post_init__(self):
        if self.kind not in (INJECTOR, PRODUCER):
            raise WellGeometryError(f"well {self.name}: kind must be injector or producer, got {self.kind}")
        if self.rw <= 0:
            raise WellGeometryError(f"well {self.name}: wellbore radius must be positive")

    @property
    def is_injector(self) -> bool:
        return self.kind == INJECTOR

    def mirrored(self, nx: int) -> "WellSpec":
        """Same well reflected across the vertical grid axis."""
        return WellSpec(self.name, nx - 1 - self.i, self.j, self.kind, self.bhp, self.rw)


def equivalent_radius(dx: float, dy: float, kx: float, ky: float) -> float:
    """Peaceman equivalent radius for an anisotropic rectangular cell."""
    ratio = ky / kx
    return 0.28 * np.sqrt(np.sqrt(ratio) * dx**2 + np.sqrt(1.0 / ratio) * dy**2) / (
        ratio**0.25 + ratio**-0.25
    )


def peaceman_index(dx: float, dy: float, dz: float, kx: float, ky: float, rw: float) -> float:
    """
    Geometric well index 2*pi*sqrt(kx*ky)*h / ln(r0/rw) in mD*m.

    The unit conversion to m3/(day*bar*cP) is applied by the solver.

    Raises:
        WellGeometryError: On non-positive inputs or r0 <= rw
    """
    if min(dx, dy, dz, kx, ky, rw) <= 0:
        raise WellGeometryError(
            f"well index needs positive dims, permeabilities and radius: {(dx, dy, dz, kx, ky, rw)}"
        )
    r0 = equivalent_radius(dx, dy, kx, ky)
    if r0 <= rw:
        raise WellGeometryError(f"equivalent radius {r0:.4g} m does not exceed wellbore radius {rw} m")
    return float(2.0 * np.pi * np.sqrt(kx * ky) * dz / np.log(r0 / rw))


def default_wells(
    nx: int,
    ny: int,
    injector_bhp: float = 330.0,
    producer_bhp: float = 300.0,
    rw: float = 0.1,
) -> list[WellSpec]:
    """Three injectors and two producers at the standard well sites."""
    wells = []
    for name, fx, fy, kind in WELL_SITES:
        i, j = site_cell(fx, fy, nx, ny)
        bhp = injector_bhp if kind == INJECTOR else producer_bhp
        wells.append(WellSpec(name, i, j, kind, bhp, rw))
    return wells


def wells_from_config(
    entries: Optional[Sequence[dict]],
    nx: int,
    ny: int,
    injector_bhp: float,
    producer_bhp: float,
    rw: float,
) -> list[WellSpec]:
    """Explicit well list from config, or the default pattern when absent."""
    if not entries:
        return default_wells(nx, ny, injector_bhp, producer_bhp, rw)
    wells = []
    for entry in entries:
        kind = entry["kind"]
        default_bhp = injector_bhp if kind == INJECTOR else producer_bhp
        wells.append(WellSpec(entry["name"], entry["i"], entry["j"], kind, entry.get("bhp", default_bhp), rw))
    return wells


def check_wells(wells: Sequence[WellSpec], nx: int, ny: int) -> None:
    names = [w.name for w in wells]
    if len(set(names)) != len(names):
        raise WellGeometryError(f"duplicate well names {names}")
    for w in wells:
        if not (0 <= w.i < nx and 0 <= w.j < ny):
            raise WellGeometryError(f"well {w.name} at ({w.i}, {w.j}) outside {nx}x{ny} grid")
