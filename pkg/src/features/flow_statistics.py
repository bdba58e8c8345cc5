"""
FlowStatistics Feature

Runs the flow simulator over sets of geomodels and summarizes their well
responses as P10/P50/P90 bands.

Composes:
- ImpesSimulator, RockFluidProps, WellSpec (component)
- SpatialStatistics: percentile_curves (component)
- Logger (primitive)

Simulations are independent and run across a process pool; results are
returned in input order whatever the worker count.
"""

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from src.components.impes_solver import ImpesSimulator, WellSeries
from src.components.rock_fluid import RockFluidProps
from src.components.spatial_statistics import PercentileBand, percentile_curves
from src.components.well_model import INJECTOR, PRODUCER, WellSpec, wells_from_config
from src.primitives.errors import ForwardModelError, GeomodelError
from src.primitives.facies import FaciesGrid
from src.primitives.logger import Logger

BAND_HEADER = ("time", "p10", "p50", "p90")


@dataclass(frozen=True)
class FlowSetup:
    """Everything a simulation needs besides the facies grid"""

    props: RockFluidProps = field(default_factory=RockFluidProps)
    wells: tuple[WellSpec, ...] = ()
    dims: tuple[float, float, float] = (20.0, 20.0, 5.0)
    t_end: float = 2500.0
    max_dt: float = 50.0
    report_interval: Optional[float] = None

    @classmethod
    def from_config(cls, section: dict, nx: int, ny: int) -> "FlowSetup":
        wells = wells_from_config(
            section.get("wells"),
            nx,
            ny,
            section.get("injector_bhp", 330.0),
            section.get("producer_bhp", 300.0),
            section.get("rw", 0.1),
        )
        return cls(
            props=RockFluidProps.from_config(section),
            wells=tuple(wells),
            dims=(section.get("dx", 20.0), section.get("dy", 20.0), section.get("dz", 5.0)),
            t_end=section.get("t_end", 2500.0),
            max_dt=section.get("max_dt", 50.0),
            report_interval=section.get("report_interval"),
        )

    def with_properties(self, porosity: Sequence[float], permeability: Sequence[float]) -> "FlowSetup":
        return replace(self, props=self.props.with_facies_properties(porosity, permeability))

    def run(self, grid: FaciesGrid) -> WellSeries:
        series, _ = ImpesSimulator(grid, self.props, self.wells, self.dims).run(
            self.t_end, self.max_dt, self.report_interval
        )
        return series


def _run_member(args) -> WellSeries:
    index, codes, setup = args
    try:
        return setup.run(FaciesGrid(codes))
    except GeomodelError as e:
        raise ForwardModelError(index, str(e)) from e


def simulate_ensemble(
    grids: Sequence[FaciesGrid],
    setups: Sequence[FlowSetup] | FlowSetup,
    workers: int = 1,
) -> list[WellSeries]:
    """
    Simulate every grid, each with its own setup or a shared one.

    Raises:
        ForwardModelError: Naming the first member whose simulation failed
    """
    if isinstance(setups, FlowSetup):
        setups = [setups] * len(grids)
    jobs = [(k, g.codes, s) for k, (g, s) in enumerate(zip(grids, setups))]
    if workers <= 1 or len(jobs) < 2:
        return [_run_member(job) for job in jobs]
    chunksize = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_run_member, jobs, chunksize=chunksize))


@dataclass
class FlowStatistics:
    times: np.ndarray
    bands: dict[str, PercentileBand]
    top_injector_counts: dict[str, int]

    @property
    def top_injector(self) -> str:
        return max(sorted(self.top_injector_counts), key=lambda w: self.top_injector_counts[w])

    def summary(self) -> dict:
        return {
            "top_injector": self.top_injector,
            "top_injector_counts": dict(self.top_injector_counts),
            "quantities": sorted(self.bands),
        }


def series_quantities(series: WellSeries) -> dict[str, np.ndarray]:
    """Field injection plus each well's role-specific rates."""
    out = {"field_injection": series.field_injection}
    for w in series.wells:
        if series.kinds[w] == INJECTOR:
            out[f"{w}:water_injection"] = series.rate(w, "water_injection")
        elif series.kinds[w] == PRODUCER:
            out[f"{w}:oil_production"] = series.rate(w, "oil_production")
            out[f"{w}:water_production"] = series.rate(w, "water_production")
    return out


def summarize_series(all_series: Sequence[WellSeries]) -> FlowStatistics:
    """Bands over realizations and the most frequent top cumulative injector."""
    if not all_series:
        raise ForwardModelError(-1, "no simulated series to summarize")
    times = all_series[0].times
    quantities = [series_quantities(s) for s in all_series]
    bands = {
        name: percentile_curves(np.stack([q[name] for q in quantities]), times)
        for name in quantities[0]
    }
    counts: Counter = Counter()
    for s in all_series:
        injectors = [w for w in s.wells if s.kinds[w] == INJECTOR]
        if injectors:
            totals = [s.cumulative(w, "water_injection")[-1] for w in injectors]
            counts[injectors[int(np.argmax(totals))]] += 1
    return FlowStatistics(times, bands, dict(counts))


def flow_statistics(
    grids: Sequence[FaciesGrid],
    setup: FlowSetup,
    workers: int = 1,
    logger: Optional[Logger] = None,
) -> tuple[FlowStatistics, list[WellSeries]]:
    """
    Simulate a geomodel set and summarize its rates.

    Returns:
        (FlowStatistics, per-realization series)
    """
    if logger:
        logger.info("Flow statistics started", {"models": len(grids), "workers": workers, "t_end": setup.t_end})
    all_series = simulate_ensemble(grids, setup, workers)
    stats = summarize_series(all_series)
    if logger:
        logger.info("Flow statistics complete", stats.summary())
    return stats, all_series
