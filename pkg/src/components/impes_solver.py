"""
ImpesSolver Component

Two-phase oil-water IMPES simulation on a 2D facies grid with BHP wells.

Composes:
- RockFluid (component): property lookup, Corey mobilities
- WellModel (component): Peaceman well index
- Logger (primitive)

Scheme per pressure step dt (<= max_dt, aligned to report times):
- pressure, implicit, mobilities from S^n upwinded by p^n:
    phi*V*c_eff*(p - p^n)/dt + sum T*lam_t*(p_i - p_j) + C*WI*lam_t*(p_i - p_bh) = 0
  with c_eff = Sw^n*c_w + So^n*c_o and two-point fluxes over harmonic
  transmissibilities;
- saturation, explicit, in CFL-limited sub-steps with the total fluxes frozen
  and water fractional flow upwinded by the flux direction. The water
  compressibility term is applied in proportion dt_sub/dt.
Injectors inject pure water at the cell's total mobility.

The phase volumes injected, produced and accumulated are tracked, and their
cumulative mismatch relative to injected volume is audited at every report.
Units: bar, mD, cP, m, m3/day, days.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from src.components.rock_fluid import (
    RockFluidProps,
    assign_properties,
    fractional_flow,
    max_fractional_flow_slope,
    mobilities,
)
from src.components.well_model import WellSpec, check_wells, peaceman_index
from src.primitives.errors import LinearSolverError, SaturationOvershootError
from src.primitives.facies import FaciesGrid
from src.primitives.logger import Logger

# mD * m2 / (cP * m * bar) -> m3/day
DARCY_METRIC = 0.008527

CFL_TARGET = 0.9
MAX_SUBSTEPS = 100_000
SATURATION_TOLERANCE = 1e-3

PHASES = ("water_injection", "oil_production", "water_production")


@dataclass
class SimState:
    pressure: np.ndarray
    sw: np.ndarray
    time: float = 0.0
    cum_water_injected: float = 0.0
    cum_water_produced: float = 0.0
    cum_oil_produced: float = 0.0
    water_accumulated: float = 0.0
    oil_accumulated: float = 0.0

    def balance_error(self) -> float:
        """Cumulative |in - out - accumulated| per phase over the larger throughput."""
        scale = max(self.cum_water_injected, self.cum_water_produced + self.cum_oil_produced)
        if scale <= 0.0:
            return 0.0
        water = abs(self.cum_water_injected - self.cum_water_produced - self.water_accumulated)
        oil = abs(-self.cum_oil_produced - self.oil_accumulated)
        return max(water, oil) / scale


@dataclass
class WellSeries:
    """Interval-averaged rates (m3/day) at each report time"""

    times: np.ndarray
    wells: list[str]
    kinds: dict[str, str]
    rates: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    balance_errors: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def rate(self, well: str, phase: str) -> np.ndarray:
        return self.rates[(well, phase)]

    @property
    def field_injection(self) -> np.ndarray:
        return sum((self.rates[(w, "water_injection")] for w in self.wells), np.zeros_like(self.times))

    @property
    def field_oil(self) -> np.ndarray:
        return sum((self.rates[(w, "oil_production")] for w in self.wells), np.zeros_like(self.times))

    @property
    def field_water(self) -> np.ndarray:
        return sum((self.rates[(w, "water_production")] for w in self.wells), np.zeros_like(self.times))

    def cumulative(self, well: str, phase: str) -> np.ndarray:
        intervals = np.diff(np.concatenate([[0.0], self.times]))
        return np.cumsum(self.rates[(well, phase)] * intervals)

    def to_rows(self) -> list[list]:
        """(time, well, phase, rate) rows for CSV output."""
        rows = []
        for k, t in enumerate(self.times):
            for w in self.wells:
                for phase in PHASES:
                    rows.append([float(t), w, phase, float(self.rates[(w, phase)][k])])
        return rows


class ImpesSimulator:
    """One simulation case: grid properties, wells and cell geometry"""

    def __init__(
        self,
        grid: FaciesGrid,
        props: RockFluidProps,
        wells: Sequence[WellSpec],
        dims: tuple[float, float, float] = (20.0, 20.0, 5.0),
        logger: Optional[Logger] = None,
    ):
        self.props = props
        self.wells = list(wells)
        self.dx, self.dy, self.dz = dims
        self.logger = logger
        self.ny, self.nx = grid.codes.shape
        check_wells(self.wells, self.nx, self.ny)

        phi, perm = assign_properties(grid, props)
        self.pore_volume = (phi * self.dx * self.dy * self.dz).reshape(-1)
        self.perm = perm.reshape(-1)
        self._build_connections(perm)
        self.well_cells = np.array([w.j * self.nx + w.i for w in self.wells], dtype=np.int64)
        self.well_index = np.array(
            [
                DARCY_METRIC * peaceman_index(self.dx, self.dy, self.dz, perm[w.j, w.i], perm[w.j, w.i], w.rw)
                for w in self.wells
            ]
        )
        self.well_bhp = np.array([w.bhp for w in self.wells], dtype=np.float64)
        self.is_injector = np.array([w.is_injector for w in self.wells], dtype=bool)
        self.fw_slope = max_fractional_flow_slope(props)

    def _build_connections(self, perm: np.ndarray) -> None:
        nx, ny = self.nx, self.ny
        index = np.arange(nx * ny).reshape(ny, nx)
        a_x, b_x = index[:, :-1].ravel(), index[:, 1:].ravel()
        a_y, b_y = index[:-1, :].ravel(), index[1:, :].ravel()
        k = perm.ravel()

        def harmonic(a, b):
            return 2.0 * k[a] * k[b] / (k[a] + k[b])

        t_x = DARCY_METRIC * harmonic(a_x, b_x) * self.dy * self.dz / self.dx
        t_y = DARCY_METRIC * harmonic(a_y, b_y) * self.dx * self.dz / self.dy
        self.conn_a = np.concatenate([a_x, a_y])
        self.conn_b = np.concatenate([b_x, b_y])
        self.conn_t = np.concatenate([t_x, t_y])

    def initial_state(self) -> SimState:
        n = self.nx * self.ny
        return SimState(
            pressure=np.full(n, self.props.p_init, dtype=np.float64),
            sw=np.full(n, self.props.sw_init, dtype=np.float64),
        )

    # pressure

    def _solve_pressure(self, state: SimState, dt: float, lam_t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (p^{n+1}, upwinded connection mobilities)."""
        n = self.nx * self.ny
        p, sw = state.pressure, state.sw
        a, b = self.conn_a, self.conn_b
        upstream = np.where(p[a] >= p[b], a, b)
        conn_coeff = self.conn_t * lam_t[upstream]

        c_eff = sw * self.props.c_w + (1.0 - sw) * self.props.c_o
        accum = self.pore_volume * c_eff / dt
        well_coeff = self.well_index * lam_t[self.well_cells]

        diag = accum.copy()
        np.add.at(diag, a, conn_coeff)
        np.add.at(diag, b, conn_coeff)
        np.add.at(diag, self.well_cells, well_coeff)
        rhs = accum * p
        np.add.at(rhs, self.well_cells, well_coeff * self.well_bhp)

        rows = np.concatenate([np.arange(n), a, b])
        cols = np.concatenate([np.arange(n), b, a])
        vals = np.concatenate([diag, -conn_coeff, -conn_coeff])
        matrix = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()
        try:
            p_new = spsolve(matrix, rhs)
        except Exception as e:  # scipy raises several types on singular input
            raise LinearSolverError(f"pressure solve failed at t={state.time}: {e}") from e
        if not np.all(np.isfinite(p_new)):
            raise LinearSolverError(f"pressure solve returned non-finite values at t={state.time}")
        return np.asarray(p_new, dtype=np.float64), conn_coeff

    # saturation

    def _substeps(self, flux: np.ndarray, well_out: np.ndarray, dt: float) -> int:
        n = self.nx * self.ny
        inflow = np.zeros(n)
        outflow = np.zeros(n)
        np.add.at(outflow, self.conn_a, np.maximum(flux, 0.0))
        np.add.at(inflow, self.conn_b, np.maximum(flux, 0.0))
        np.add.at(outflow, self.conn_b, np.maximum(-flux, 0.0))
        np.add.at(inflow, self.conn_a, np.maximum(-flux, 0.0))
        np.add.at(outflow, self.well_cells, np.maximum(well_out, 0.0))
        np.add.at(inflow, self.well_cells, np.maximum(-well_out, 0.0))
        throughput = np.maximum(inflow, outflow) * max(self.fw_slope, 1e-12)
        active = throughput > 0
        if not active.any():
            return 1
        dt_cfl = CFL_TARGET * np.min(self.pore_volume[active] / throughput[active])
        count = int(np.ceil(dt / dt_cfl))
        if count > MAX_SUBSTEPS:
            raise SaturationOvershootError(f"CFL requires {count} saturation sub-steps at t={dt}")
        return max(count, 1)

    def step(self, state: SimState, dt: float) -> tuple[SimState, np.ndarray]:
        """
        Advance one pressure step.

        Returns:
            (new state, per-well volumes (n_wells, 3) in PHASES order over dt)

        Raises:
            LinearSolverError: If the pressure system cannot be solved
            SaturationOvershootError: If saturations leave [Swc, 1 - Sor] by more
                than the tolerance
        """
        volumes = np.zeros((len(self.wells), 3))
        if not self.wells:
            return SimState(
                pressure=state.pressure.copy(),
                sw=state.sw.copy(),
                time=state.time + dt,
                cum_water_injected=state.cum_water_injected,
                cum_water_produced=state.cum_water_produced,
                cum_oil_produced=state.cum_oil_produced,
                water_accumulated=state.water_accumulated,
                oil_accumulated=state.oil_accumulated,
            ), volumes

        props = self.props
        lam_w, lam_o = mobilities(state.sw, props)
        lam_t = lam_w + lam_o
        p_new, conn_coeff = self._solve_pressure(state, dt, lam_t)
        dp = p_new - state.pressure

        flux = conn_coeff * (p_new[self.conn_a] - p_new[self.conn_b])
        well_out = self.well_index * lam_t[self.well_cells] * (p_new[self.well_cells] - self.well_bhp)

        sw_n = state.sw
        compress_w = sw_n * props.c_w * dp
        compress_o = (1.0 - sw_n) * props.c_o * dp

        count = self._substeps(flux, well_out, dt)
        dt_sub = dt / count
        ratio = dt_sub / dt
        sw = sw_n.copy()
        upstream = np.where(flux >= 0.0, self.conn_a, self.conn_b)
        water_acc = 0.0
        oil_acc = 0.0
        for _ in range(count):
            fw = fractional_flow(sw, props)
            water_flux = flux * fw[upstream]
            divergence = np.zeros_like(sw)
            np.add.at(divergence, self.conn_a, water_flux)
            np.add.at(divergence, self.conn_b, -water_flux)

            injecting = well_out < 0.0
            well_fw = np.where(self.is_injector & injecting, 1.0, fw[self.well_cells])
            well_water_out = well_out * well_fw
            np.add.at(divergence, self.well_cells, well_water_out)

            delta = -dt_sub * divergence / self.pore_volume - compress_w * ratio
            sw = sw + delta
            water_acc += float(np.sum(self.pore_volume * (delta + compress_w * ratio)))
            oil_acc += float(np.sum(self.pore_volume * (-delta + compress_o * ratio)))

            water_vol = well_water_out * dt_sub
            oil_vol = (well_out - well_water_out) * dt_sub
            volumes[:, 0] += np.maximum(-water_vol, 0.0)
            volumes[:, 1] += oil_vol
            volumes[:, 2] += np.maximum(water_vol, 0.0)

        low, high = props.swc - SATURATION_TOLERANCE, 1.0 - props.sor + SATURATION_TOLERANCE
        if sw.min() < low or sw.max() > high:
            raise SaturationOvershootError(
                f"Sw range [{sw.min():.6f}, {sw.max():.6f}] exceeds [{props.swc}, {1 - props.sor}] at t={state.time + dt}"
            )

        injected = float(volumes[:, 0].sum())
        produced_water = float(volumes[:, 2].sum())
        return SimState(
            pressure=p_new,
            sw=sw,
            time=state.time + dt,
            cum_water_injected=state.cum_water_injected + injected,
            cum_water_produced=state.cum_water_produced + produced_water,
            cum_oil_produced=state.cum_oil_produced + float(volumes[:, 1].sum()),
            water_accumulated=state.water_accumulated + water_acc,
            oil_accumulated=state.oil_accumulated + oil_acc,
        ), volumes

    def run(
        self,
        t_end: float,
        max_dt: float,
        report_interval: Optional[float] = None,
    ) -> tuple[WellSeries, SimState]:
        """
        Simulate from t = 0 to t_end, reporting every report_interval days.

        Args:
            t_end: Simulated period in days
            max_dt: Largest pressure step in days
            report_interval: Report spacing (defaults to max_dt)

        Returns:
            (WellSeries, final SimState)
        """
        interval = report_interval or max_dt
        count = int(np.floor(t_end / interval + 1e-9))
        report_times = [interval * (k + 1) for k in range(count)]
        if not report_times or report_times[-1] < t_end - 1e-9:
            report_times.append(float(t_end))

        state = self.initial_state()
        names = [w.name for w in self.wells]
        rates = {(w, phase): np.zeros(len(report_times)) for w in names for phase in PHASES}
        balance = np.zeros(len(report_times))
        previous = 0.0
        for k, t_report in enumerate(report_times):
            interval_volumes = np.zeros((len(self.wells), 3))
            while state.time < t_report - 1e-9:
                dt = min(max_dt, t_report - state.time)
                state, volumes = self.step(state, dt)
                interval_volumes += volumes
            state.time = t_report
            span = t_report - previous
            for w_index, name in enumerate(names):
                for p_index, phase in enumerate(PHASES):
                    rates[(name, phase)][k] = interval_volumes[w_index, p_index] / span
            balance[k] = state.balance_error()
            previous = t_report
            if self.logger:
                self.logger.debug(
                    "Report step",
                    {"time": t_report, "balance_error": balance[k], "mean_pressure": float(state.pressure.mean())},
                )

        series = WellSeries(
            times=np.asarray(report_times, dtype=np.float64),
            wells=names,
            kinds={w.name: w.kind for w in self.wells},
            rates=rates,
            balance_errors=balance,
        )
        return series, state


def simulate(
    grid: FaciesGrid,
    props: RockFluidProps,
    wells: Sequence[WellSpec],
    t_end: float,
    max_dt: float,
    report_interval: Optional[float] = None,
    dims: tuple[float, float, float] = (20.0, 20.0, 5.0),
) -> WellSeries:
    """Run one simulation and return its well series."""
    series, _ = ImpesSimulator(grid, props, wells, dims).run(t_end, max_dt, report_interval)
    return series
