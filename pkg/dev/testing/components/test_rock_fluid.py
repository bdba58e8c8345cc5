"""
Tests for rock/fluid properties and Corey relative permeability
"""

import numpy as np
import pytest

from src.components.rock_fluid import (
    RockFluidProps,
    assign_properties,
    fractional_flow,
    max_fractional_flow_slope,
    relperm,
)
from src.primitives.errors import RelpermRangeError, RockPropertyError, UnknownFaciesError
from src.primitives.facies import FaciesGrid


@pytest.fixture
def props():
    return RockFluidProps()


class TestRelperm:
    def test_endpoints(self, props):
        krw, kro = relperm(np.array([props.swc, 1.0 - props.sor]), props)
        np.testing.assert_allclose(krw, [0.0, props.krw_end])
        np.testing.assert_allclose(kro, [props.kro_end, 0.0])

    def test_quadratic_midpoint(self, props):
        """Se = 0.5 with exponents 2 gives a quarter of each endpoint"""
        sw = props.swc + 0.5 * props.movable_range
        krw, kro = relperm(sw, props)
        assert krw == pytest.approx(0.25 * props.krw_end)
        assert kro == pytest.approx(0.25 * props.kro_end)

    @pytest.mark.parametrize("sw", [0.05, 0.85])
    def test_outside_range(self, props, sw):
        with pytest.raises(RelpermRangeError):
            relperm(sw, props)

    def test_fractional_flow_is_monotone(self, props):
        sw = np.linspace(props.swc, 1.0 - props.sor, 101)
        fw = fractional_flow(sw, props)
        assert fw[0] == 0.0 and fw[-1] == pytest.approx(1.0)
        assert np.all(np.diff(fw) >= 0)

    def test_max_slope_is_positive(self, props):
        assert max_fractional_flow_slope(props) > 1.0


class TestProps:
    def test_assign_properties_by_code(self, props):
        phi, k = assign_properties(FaciesGrid(np.array([[0, 1, 2]])), props)
        np.testing.assert_allclose(phi, [[0.05, 0.15, 0.2]])
        np.testing.assert_allclose(k, [[50.0, 400.0, 2500.0]])

    def test_unknown_code(self, props):
        with pytest.raises(UnknownFaciesError):
            assign_properties(np.array([[0, 4]]), props)

    def test_saturation_endpoints_overlap(self):
        with pytest.raises(RelpermRangeError):
            RockFluidProps(swc=0.5, sor=0.5)

    @pytest.mark.parametrize(
        "override", [{"porosity": (0.0, 0.1, 0.2)}, {"permeability": (1.0, -2.0, 3.0)}, {"mu_w": 0.0}, {"c_o": -1.0}]
    )
    def test_invalid_rock(self, override):
        with pytest.raises(RockPropertyError):
            RockFluidProps(**override)

    def test_from_config_and_replacement(self):
        props = RockFluidProps.from_config({"porosity": [0.1, 0.2, 0.3], "mu_o": 2.0, "dx": 20})
        assert props.porosity == (0.1, 0.2, 0.3) and props.mu_o == 2.0
        changed = props.with_facies_properties((0.1, 0.1, 0.1), (10.0, 10.0, 10.0))
        assert changed.permeability == (10.0, 10.0, 10.0)
        assert changed.mu_o == 2.0
