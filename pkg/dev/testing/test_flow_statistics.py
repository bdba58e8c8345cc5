"""
Tests for ensemble flow simulation and P10/P50/P90 summaries
"""

import numpy as np
import pytest

from src.components.well_model import WellSpec
from src.features.flow_statistics import (
    FlowSetup,
    flow_statistics,
    series_quantities,
    simulate_ensemble,
    summarize_series,
)
from src.primitives.errors import ForwardModelError
from src.primitives.facies import CHANNEL, FaciesGrid


@pytest.fixture
def setup():
    return FlowSetup.from_config({"t_end": 300.0, "max_dt": 50.0, "report_interval": 100.0}, 16, 16)


@pytest.fixture
def grids():
    a = np.zeros((16, 16), dtype=np.uint8)
    a[6:10, :] = CHANNEL
    b = np.full((16, 16), CHANNEL, dtype=np.uint8)
    c = np.ones((16, 16), dtype=np.uint8)
    return [FaciesGrid(a), FaciesGrid(b), FaciesGrid(c)]


class TestSetup:
    def test_from_config_defaults(self, setup):
        assert [w.name for w in setup.wells] == ["I1", "I2", "I3", "P1", "P2"]
        assert setup.dims == (20.0, 20.0, 5.0)
        assert setup.props.mu_o == 1.09

    def test_with_properties(self, setup):
        changed = setup.with_properties((0.1, 0.1, 0.1), (10.0, 20.0, 30.0))
        assert changed.props.permeability == (10.0, 20.0, 30.0)
        assert changed.wells == setup.wells


class TestSimulateEnsemble:
    def test_order_is_independent_of_workers(self, setup, grids):
        serial = simulate_ensemble(grids, setup)
        parallel = simulate_ensemble(grids, setup, workers=2)
        for a, b in zip(serial, parallel):
            np.testing.assert_array_equal(a.field_injection, b.field_injection)

    def test_higher_permeability_injects_more(self, setup, grids):
        levee, channel = simulate_ensemble([grids[2], grids[1]], setup)
        assert channel.field_injection[-1] > levee.field_injection[-1]

    def test_failure_names_member(self, setup, grids):
        broken = FlowSetup(props=setup.props, wells=(WellSpec("I", 40, 0, "injector", 330.0),), t_end=100.0)
        with pytest.raises(ForwardModelError) as info:
            simulate_ensemble(grids, [setup, broken, setup])
        assert info.value.member == 1


class TestSummary:
    def test_bands_and_top_injector(self, setup, grids):
        stats, series = flow_statistics(grids, setup)
        assert len(series) == 3
        np.testing.assert_allclose(stats.times, [100.0, 200.0, 300.0])
        assert "field_injection" in stats.bands and "P1:water_production" in stats.bands
        assert "I1:oil_production" not in stats.bands
        band = stats.bands["field_injection"]
        assert np.all(band.p10 <= band.p50) and np.all(band.p50 <= band.p90)
        assert sum(stats.top_injector_counts.values()) == 3
        assert stats.summary()["top_injector"] == stats.top_injector

    def test_quantities(self, setup, grids):
        series = setup.run(grids[0])
        quantities = series_quantities(series)
        assert len(quantities) == 1 + 3 + 2 * 2

    def test_empty(self):
        with pytest.raises(ForwardModelError):
            summarize_series([])
