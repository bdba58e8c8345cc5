"""
Tiny pipeline configs: 16x16 grid, a few training steps, short waterflood
"""

import json

import pytest

from src.core.pipeline_config import PipelineConfig

TINY_PIPELINE = {
    "seed": 11,
    "workers": 1,
    "geogen": {
        "nx": 16,
        "ny": 16,
        "n_channels": [1, 2],
        "wavelength": [8.0, 16.0],
        "n_total": 10,
        "conditioning": [],
    },
    "vae": {"channels": [4, 8, 8], "norm_groups": 2, "batch_size": 4, "epochs": 1, "max_steps": 2},
    "diffusion": {
        "T": 20,
        "ddim_steps": 3,
        "channels": 4,
        "time_embed_dim": 8,
        "norm_groups": 2,
        "batch_size": 4,
        "epochs": 1,
        "max_steps": 2,
    },
    "flow": {"t_end": 200.0, "max_dt": 50.0, "report_interval": 100.0},
    "esmda": {"ensemble_size": 4, "alphas": [2.0, 2.0], "obs_until": 200.0, "n_medoids": 2},
}


@pytest.fixture(scope="session")
def config_factory():
    """PipelineConfig for the tiny pipeline writing under output_dir"""

    def make(output_dir, **paths) -> PipelineConfig:
        data = json.loads(json.dumps(TINY_PIPELINE))
        data["paths"] = {"output_dir": str(output_dir), **paths}
        return PipelineConfig.from_dict(data)

    return make


@pytest.fixture
def tiny_pipeline(tmp_path):
    """Config document writing under tmp_path/out"""
    data = json.loads(json.dumps(TINY_PIPELINE))
    data["paths"] = {"output_dir": str(tmp_path / "out")}
    return data


@pytest.fixture
def tiny_config_file(tmp_path, tiny_pipeline):
    path = tmp_path / "pipeline.json"
    path.write_text(json.dumps(tiny_pipeline))
    return path
