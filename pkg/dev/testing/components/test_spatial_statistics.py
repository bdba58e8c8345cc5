"""
Tests for two-point statistics, SSIM, percentile bands and hard-data accuracy
"""

import numpy as np
import pytest

from src.components.spatial_statistics import (
    anchored_ssim,
    consecutive_ssim,
    hard_data_accuracy,
    percentile_curves,
    ssim,
    two_point_probability,
)
from src.primitives.errors import MetricsInputError
from src.primitives.facies import CHANNEL, LEVEE, MUD, ConditioningSet, FaciesGrid


def ssim_reference(x, y, win=7, data_range=2.0):
    """Mean SSIM over every fully contained window, sample statistics."""
    c1, c2 = (0.01 * data_range) ** 2, (0.03 * data_range) ** 2
    values = []
    for r in range(x.shape[0] - win + 1):
        for c in range(x.shape[1] - win + 1):
            a = x[r:r + win, c:c + win].ravel()
            b = y[r:r + win, c:c + win].ravel()
            ma, mb = a.mean(), b.mean()
            va, vb = a.var(ddof=1), b.var(ddof=1)
            cov = np.sum((a - ma) * (b - mb)) / (a.size - 1)
            values.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma**2 + mb**2 + c1) * (va + vb + c2)))
    return float(np.mean(values))


@pytest.fixture
def checkerboard():
    jj, ii = np.mgrid[0:8, 0:8]
    return FaciesGrid(np.where((ii + jj) % 2 == 0, CHANNEL, MUD).astype(np.uint8))


class TestTwoPoint:
    def test_checkerboard_lags(self, checkerboard):
        _, env_x = two_point_probability([checkerboard], CHANNEL, (1, 0), 3)
        np.testing.assert_allclose(env_x.mean, [1.0, 0.0, 1.0, 0.0])
        _, env_d = two_point_probability([checkerboard], CHANNEL, (1, 1), 3)
        np.testing.assert_allclose(env_d.mean, [1.0, 1.0, 1.0, 1.0])

    def test_absent_facies_reports_zero(self):
        curves, _ = two_point_probability([FaciesGrid(np.zeros((6, 6), dtype=np.uint8))], CHANNEL, (0, 1), 2)
        np.testing.assert_array_equal(curves[0].prob, [1.0, 0.0, 0.0])

    def test_envelope_spans_curves(self, checkerboard):
        stripes = FaciesGrid(np.tile(np.array([[CHANNEL], [CHANNEL], [LEVEE]], dtype=np.uint8), (2, 6)))
        curves, env = two_point_probability([checkerboard, stripes], CHANNEL, (0, 1), 2)
        assert len(curves) == 2
        np.testing.assert_allclose(env.low, np.minimum(curves[0].prob, curves[1].prob))
        np.testing.assert_allclose(env.high, np.maximum(curves[0].prob, curves[1].prob))
        assert env.inside_fraction(curves[1].prob) == 1.0
        assert curves[0].to_rows()[1] == [1, 0.0]

    def test_code_array_input(self, checkerboard):
        _, a = two_point_probability(checkerboard.codes[None], CHANNEL, (1, 0), 2)
        _, b = two_point_probability([checkerboard], CHANNEL, (1, 0), 2)
        np.testing.assert_array_equal(a.mean, b.mean)

    @pytest.mark.parametrize("direction, max_lag", [((0, 0), 1), ((-1, 0), 1), ((1, 0), 8)])
    def test_invalid_arguments(self, checkerboard, direction, max_lag):
        with pytest.raises(MetricsInputError):
            two_point_probability([checkerboard], CHANNEL, direction, max_lag)

    def test_empty_set(self):
        with pytest.raises(MetricsInputError):
            two_point_probability([], CHANNEL, (1, 0), 1)


class TestSsim:
    def test_identical_is_one(self, checkerboard):
        assert ssim(checkerboard, checkerboard) == pytest.approx(1.0)

    def test_matches_windowed_reference(self):
        rng = np.random.default_rng(9)
        a = FaciesGrid(rng.integers(0, 3, size=(12, 10)))
        b = FaciesGrid(rng.integers(0, 3, size=(12, 10)))
        expected = ssim_reference(a.to_continuous(), b.to_continuous())
        assert ssim(a, b) == pytest.approx(expected, abs=1e-9)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(1)
        a, b = rng.integers(-1, 2, size=(2, 9, 9)).astype(float)
        assert ssim(a, b) == pytest.approx(ssim(b, a))
        assert -1.0 <= ssim(a, b) <= 1.0

    def test_shape_checks(self):
        with pytest.raises(MetricsInputError):
            ssim(np.zeros((8, 8)), np.zeros((8, 9)))
        with pytest.raises(MetricsInputError):
            ssim(np.zeros((6, 8)), np.zeros((6, 8)))

    def test_sequences(self, checkerboard):
        shifted = FaciesGrid(np.roll(checkerboard.codes, 1, axis=1))
        frames = [checkerboard, checkerboard, shifted]
        np.testing.assert_allclose(consecutive_ssim(frames)[0], 1.0)
        assert len(consecutive_ssim(frames)) == 2
        assert anchored_ssim(frames)[0] == pytest.approx(1.0)
        assert anchored_ssim(frames)[2] < 0.0


class TestPercentiles:
    def test_linear_percentiles(self):
        values = np.arange(11.0)[:, None] * np.array([[1.0, 2.0]])
        band = percentile_curves(values, np.array([100.0, 200.0]))
        np.testing.assert_allclose(band.p10, [1.0, 2.0])
        np.testing.assert_allclose(band.p50, [5.0, 10.0])
        np.testing.assert_allclose(band.p90, [9.0, 18.0])
        assert band.to_rows()[0] == [100.0, 1.0, 5.0, 9.0]

    def test_bracket_fraction(self):
        band = percentile_curves(np.arange(11.0)[:, None] * np.ones((1, 4)), np.arange(4.0))
        assert band.bracket_fraction(np.array([0.0, 5.0, 9.0, 10.0])) == 0.5

    def test_time_grid_mismatch(self):
        with pytest.raises(MetricsInputError):
            percentile_curves(np.zeros((3, 4)), np.zeros(3))

    def test_no_realizations(self):
        with pytest.raises(MetricsInputError):
            percentile_curves(np.zeros((0, 4)), np.zeros(4))


class TestHardData:
    def test_fraction_over_grids_and_points(self):
        cond = ConditioningSet(((0, 0, CHANNEL), (2, 1, MUD)))
        good = np.zeros((3, 3), dtype=np.uint8)
        good[0, 0] = CHANNEL
        bad = np.full((3, 3), LEVEE, dtype=np.uint8)
        assert hard_data_accuracy([FaciesGrid(good), FaciesGrid(bad)], cond) == 0.5

    def test_empty_conditioning(self, checkerboard):
        assert hard_data_accuracy([checkerboard], ConditioningSet(())) == 1.0

    def test_out_of_bounds(self, checkerboard):
        with pytest.raises(ValueError):
            hard_data_accuracy([checkerboard], ConditioningSet(((9, 0, CHANNEL),)))
