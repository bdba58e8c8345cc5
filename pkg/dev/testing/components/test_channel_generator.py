"""
Tests for ChannelGenerator: style validation, rasterization and conditioning
"""

import numpy as np
import pytest
from scipy.ndimage import distance_transform_edt

from src.components.channel_generator import (
    ChannelGenerator,
    ChannelObject,
    ChannelStyle,
    generate_realization,
)
from src.primitives.errors import ConditioningInfeasibleError, InvalidStyleError
from src.primitives.facies import CHANNEL, LEVEE, MUD, ConditioningSet


def straight(offset=0.0, width=3.0, levee=1.0, theta=0.0):
    return ChannelObject(theta=theta, offset=offset, amplitude=0.0, wavelength=10.0, phase=0.0,
                         width=width, levee_halfwidth=levee)


class TestChannelStyle:
    def test_defaults_are_valid(self):
        assert ChannelStyle().n_channels == (2, 4)

    @pytest.mark.parametrize(
        "field, value",
        [("width", (0.5, 2.0)), ("n_channels", (3, 1)), ("wavelength", (0.0, 5.0)), ("amplitude", (-1.0, 1.0))],
    )
    def test_invalid_ranges(self, field, value):
        with pytest.raises(InvalidStyleError):
            ChannelStyle(**{field: value})

    def test_from_config_ignores_other_keys(self):
        style = ChannelStyle.from_config({"nx": 16, "ny": 24, "width": [2, 3], "n_total": 500})
        assert (style.nx, style.ny, style.width) == (16, 24, (2, 3))


class TestPaint:
    def test_no_channels_is_all_mud(self):
        grid = ChannelGenerator(ChannelStyle(nx=16, ny=16)).paint([])
        assert np.all(grid.codes == MUD)

    def test_straight_channel_band(self):
        """Horizontal channel of width 3 through the centre row band"""
        generator = ChannelGenerator(ChannelStyle(nx=16, ny=17))
        grid = generator.paint([straight(width=3.0, levee=1.0)])
        np.testing.assert_array_equal(grid.codes[7:10, :], CHANNEL)
        np.testing.assert_array_equal(grid.codes[6, :], LEVEE)
        np.testing.assert_array_equal(grid.codes[10, :], LEVEE)
        np.testing.assert_array_equal(grid.codes[:6, :], MUD)

    def test_centerline_is_four_connected(self):
        generator = ChannelGenerator(ChannelStyle(nx=24, ny=24))
        line = generator.centerline(straight(theta=0.3))
        jj, ii = np.nonzero(line)
        for i, j in zip(ii, jj):
            neighbours = [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)]
            assert any(0 <= a < 24 and 0 <= b < 24 and line[b, a] for a, b in neighbours)

    def test_levee_cells_touch_channels(self):
        style = ChannelStyle(nx=32, ny=32)
        grid = generate_realization(style, ConditioningSet(), seed=3)
        channel = grid.codes == CHANNEL
        if channel.any():
            distance = distance_transform_edt(~channel)
            assert np.all(distance[grid.codes == LEVEE] <= style.levee_halfwidth[1] + 1e-9)


class TestGenerate:
    def test_deterministic_in_seed(self):
        style = ChannelStyle(nx=32, ny=32)
        a = generate_realization(style, ConditioningSet(), seed=7)
        assert a == generate_realization(style, ConditioningSet(), seed=7)

    def test_seeds_differ(self):
        style = ChannelStyle(nx=32, ny=32)
        grids = {generate_realization(style, ConditioningSet(), seed=s) for s in range(5)}
        assert len(grids) > 1

    def test_zero_channel_style_is_mud(self):
        style = ChannelStyle(nx=16, ny=16, n_channels=(0, 0))
        grid = generate_realization(style, ConditioningSet(((3, 3, MUD),)), seed=1)
        assert np.all(grid.codes == MUD)

    @pytest.mark.parametrize("seed", range(8))
    def test_well_site_conditioning_is_honored(self, seed):
        """Channel facies at all five well cells"""
        cond = ConditioningSet.at_well_sites(32, 32)
        grid = generate_realization(ChannelStyle(nx=32, ny=32), cond, seed=seed)
        assert cond.honored_by(grid).all()
        for i, j, _ in cond:
            assert grid.at(i, j) == CHANNEL

    def test_infeasible_conditioning(self):
        style = ChannelStyle(nx=16, ny=16, n_channels=(0, 0))
        with pytest.raises(ConditioningInfeasibleError):
            generate_realization(style, ConditioningSet(((4, 4, CHANNEL),)), seed=0, retry_budget=5, repair_attempts=3)

    def test_out_of_bounds_conditioning(self):
        with pytest.raises(ValueError):
            generate_realization(ChannelStyle(nx=8, ny=8), ConditioningSet(((8, 0, CHANNEL),)), seed=0)

    def test_repair_translates_channel_through_point(self):
        """With no rejection budget the repair stage alone must honor the point"""
        style = ChannelStyle(nx=32, ny=32, n_channels=(1, 1))
        cond = ConditioningSet(((20, 5, CHANNEL),))
        generator = ChannelGenerator(style, retry_budget=1, repair_attempts=5)
        for seed in range(5):
            assert generator.generate(cond, seed).at(20, 5) == CHANNEL

    def test_reaim_through_two_aligned_points(self):
        """A single channel covers two horizontally aligned points"""
        style = ChannelStyle(nx=32, ny=32, n_channels=(1, 1))
        cond = ConditioningSet(((4, 10, CHANNEL), (27, 10, CHANNEL)))
        grid = ChannelGenerator(style, retry_budget=1, repair_attempts=3).generate(cond, seed=2)
        assert cond.honored_by(grid).all()
