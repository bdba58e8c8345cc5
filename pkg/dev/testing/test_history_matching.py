"""
Tests for twin-experiment history matching with the tiny latent diffusion model
"""

import csv

import numpy as np
import pytest

from src.components.ensemble_smoother import CASE_LATENT_PROPERTIES, property_bounds
from src.features.flow_statistics import FlowSetup
from src.features.history_matching import (
    MISMATCH_HEADER,
    HmConfig,
    make_twin_truth,
    observe_truth,
    run_history_matching,
    write_history_matching,
)
from src.primitives.ensemble_codec import EnsembleCodec
from src.primitives.errors import InflationScheduleError
from src.primitives.facies import ConditioningSet


@pytest.fixture
def setup():
    return FlowSetup.from_config({"t_end": 300.0, "max_dt": 50.0, "report_interval": 100.0}, 16, 16)


def tiny_config(**overrides):
    options = dict(ensemble_size=4, alphas=(2.0, 2.0), obs_until=200.0, n_medoids=2, ddim_steps=3, truth_seed=21, seed=5)
    options.update(overrides)
    return HmConfig(**options)


class TestTruth:
    def test_case_one_has_no_properties(self, tiny_style):
        truth = make_twin_truth(tiny_style, ConditioningSet(()), 21)
        assert truth.properties is None
        assert truth.grid.codes.shape == (16, 16)

    def test_case_two_properties_within_bounds(self, tiny_style, setup):
        truth = make_twin_truth(tiny_style, ConditioningSet(()), 21, case=CASE_LATENT_PROPERTIES)
        low, high = property_bounds()
        assert np.all(truth.properties >= low) and np.all(truth.properties <= high)
        assert truth.setup(setup).props.porosity == tuple(truth.properties[:3])

    def test_observations(self, tiny_style, setup):
        truth = make_twin_truth(tiny_style, ConditioningSet(()), 21)
        obs, layout, series = observe_truth(truth, setup, tiny_config())
        assert obs.size == layout.size == 7 * 2
        assert np.all(obs.c_d > 0)
        again, _, _ = observe_truth(truth, setup, tiny_config())
        np.testing.assert_array_equal(obs.d_obs, again.d_obs)


class TestConfig:
    def test_from_config(self):
        config = HmConfig.from_config({"case": 2, "ensemble_size": 8, "alphas": [4, 4, 4, 4]}, ddim_steps=7, seed=3)
        assert config.alphas == (4, 4, 4, 4) and config.ddim_steps == 7
        assert config.esmda().case == 2 and config.esmda().seed == 3

    def test_bad_schedule(self):
        with pytest.raises(InflationScheduleError):
            tiny_config(alphas=(1.0, 1.0)).esmda()


class TestRunHistoryMatching:
    @pytest.fixture
    def result(self, tiny_model, tiny_style, setup):
        truth = make_twin_truth(tiny_style, ConditioningSet(()), 21)
        return run_history_matching(tiny_model, setup, truth, tiny_config())

    def test_steps_and_forecasts(self, result):
        assert len(result.esmda.ensembles) == 3
        assert len(result.esmda.predictions) == 3
        assert result.esmda.predictions[0].shape == (4, 14)
        assert [d.alpha for d in result.esmda.diagnostics] == [0.0, 2.0, 2.0]
        np.testing.assert_allclose(result.prior_forecast.times, [100.0, 200.0, 300.0])
        assert 1 <= len(result.prior_medoids) <= 2 and 1 <= len(result.posterior_medoids) <= 2

    def test_summary(self, result):
        summary = result.summary()
        assert summary["case"] == 1 and summary["steps"] == 2
        assert len(summary["mismatch"]) == 3
        assert 0.0 <= summary["history_bracket_fraction"] <= 1.0
        assert "properties" not in summary

    def test_outputs(self, tmp_path, result):
        outputs = write_history_matching(result, str(tmp_path))
        members = EnsembleCodec().load(outputs["ensemble_02"])
        np.testing.assert_array_equal(members, result.esmda.posterior.members)
        with open(outputs["mismatch"], newline="") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == MISMATCH_HEADER and len(rows) == 4
        assert (tmp_path / "forecasts" / "posterior" / "field_injection.csv").exists()
        assert (tmp_path / "forecasts" / "prior" / "P1_oil_production.csv").exists()
        for name in ("prior_medoids", "posterior_medoids", "truth", "summary", "observations"):
            assert outputs[name].startswith(str(tmp_path))

    def test_case_two_reports_properties(self, tiny_model, tiny_style, setup):
        truth = make_twin_truth(tiny_style, ConditioningSet(()), 21, case=CASE_LATENT_PROPERTIES)
        result = run_history_matching(tiny_model, setup, truth, tiny_config(case=CASE_LATENT_PROPERTIES))
        properties = result.summary()["properties"]
        assert list(properties)[:2] == ["phi_mud", "phi_levee"]
        assert "truth" in properties["lnk_channel"]
        low, high = property_bounds()
        assert np.all(result.esmda.posterior.properties >= low)
        assert np.all(result.esmda.posterior.properties <= high)
