"""
Tests for latent diffusion sampling and interpolation stability
"""

import numpy as np
import pytest

from src.features.geomodel_sampling import (
    LatentDiffusionModel,
    draw_start_latents,
    generate,
    interpolation_deltas,
    interpolation_stability,
    sample_geomodels,
)
from src.primitives.errors import InterpolationRangeError, ShapeMismatchError
from src.primitives.facies import FaciesGrid


class TestGenerate:
    def test_latent_shape_from_grid(self, tiny_model):
        assert tiny_model.grid_shape == (16, 16)
        assert tiny_model.latent_shape == (1, 2, 2)
        assert tiny_model.latent_size == 4

    def test_single_and_batched(self, tiny_model):
        xi = draw_start_latents(tiny_model, 2, seed=0)
        one = generate(tiny_model, xi[0], 5)
        many = generate(tiny_model, xi, 5)
        assert isinstance(one, FaciesGrid) and one.codes.shape == (16, 16)
        assert len(many) == 2 and many[0] == one

    def test_ddim_is_deterministic(self, tiny_model, tiny_ldm):
        xi = draw_start_latents(tiny_model, 3, seed=4)
        assert generate(tiny_model, xi, 5) == generate(tiny_ldm, xi, 5)

    def test_ddpm_follows_seed(self, tiny_model):
        xi = draw_start_latents(tiny_model, 2, seed=1)
        a = generate(tiny_model, xi, 0, sampler="ddpm", seed=3)
        b = generate(tiny_model, xi, 0, sampler="ddpm", seed=3)
        assert a == b

    def test_shape_mismatch(self, tiny_model):
        with pytest.raises(ShapeMismatchError):
            generate(tiny_model, np.zeros((1, 4, 4)), 5)

    def test_unknown_sampler(self, tiny_model):
        with pytest.raises(ValueError):
            generate(tiny_model, np.zeros((1, 2, 2)), 5, sampler="euler")


class TestStartLatents:
    def test_per_sample_streams(self, tiny_model):
        """Sample k does not depend on how many are drawn"""
        np.testing.assert_array_equal(draw_start_latents(tiny_model, 3, 7)[:2], draw_start_latents(tiny_model, 2, 7))

    def test_encoder_source(self, tiny_model, tiny_dataset):
        xi = draw_start_latents(tiny_model, 4, 2, source="encoder", grids=tiny_dataset.train)
        assert xi.shape == (4, 1, 2, 2) and xi.dtype == np.float32
        np.testing.assert_array_equal(xi, draw_start_latents(tiny_model, 4, 2, source="encoder", grids=tiny_dataset.train))

    def test_encoder_source_needs_grids(self, tiny_model):
        with pytest.raises(ValueError):
            draw_start_latents(tiny_model, 2, 0, source="encoder")
        with pytest.raises(ValueError):
            draw_start_latents(tiny_model, 2, 0, source="uniform")

    def test_sample_geomodels(self, tiny_model):
        grids = sample_geomodels(tiny_model, 3, seed=5, n_steps=4)
        assert len(grids) == 3
        assert grids == sample_geomodels(tiny_model, 3, seed=5, n_steps=4)


class TestInterpolation:
    def test_deltas(self):
        np.testing.assert_allclose(interpolation_deltas(0.25), [0.0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(interpolation_deltas(0.3), [0.0, 0.3, 0.6, 0.9, 1.0])

    @pytest.mark.parametrize("step", [0.0, 1.0, -0.1])
    def test_step_range(self, step):
        with pytest.raises(InterpolationRangeError):
            interpolation_deltas(step)

    def test_report(self, tiny_model):
        xi1, xi2 = draw_start_latents(tiny_model, 2, seed=8)
        report = interpolation_stability(tiny_model, xi1, xi2, 0.25, 5)
        assert len(report.grids) == 5
        assert report.consecutive.shape == (4,)
        assert report.anchored[0] == pytest.approx(1.0)
        assert report.grids[0] == generate(tiny_model, xi1, 5)
        assert report.grids[-1] == generate(tiny_model, xi2, 5)
        assert report.summary()["step"] == pytest.approx(0.25)

    def test_identical_endpoints(self, tiny_model):
        xi = draw_start_latents(tiny_model, 1, seed=2)[0]
        report = interpolation_stability(tiny_model, xi, xi, 0.5, 3)
        np.testing.assert_allclose(report.consecutive, 1.0)
