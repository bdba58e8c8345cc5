"""
Shared fixtures: a tiny 16x16 dataset and models trained for a few steps
"""

import pytest

from src.components.channel_generator import ChannelStyle
from src.features.dataset_builder import build_dataset
from src.features.geomodel_sampling import LatentDiffusionModel
from src.features.ldm_training import LdmTrainingConfig, train_ldm
from src.features.vae_training import VaeTrainingConfig, train_vae
from src.primitives.facies import ConditioningSet


@pytest.fixture(scope="session")
def tiny_vae_config():
    return VaeTrainingConfig(channels=(4, 8, 8), norm_groups=2, batch_size=4, epochs=1, max_steps=2, seed=1)


@pytest.fixture(scope="session")
def tiny_ldm_config():
    return LdmTrainingConfig(T=20, channels=4, time_embed_dim=8, norm_groups=2, batch_size=4, epochs=1, max_steps=2, seed=2)


@pytest.fixture(scope="session")
def tiny_style():
    return ChannelStyle(nx=16, ny=16, n_channels=(1, 2), wavelength=(8.0, 16.0))


@pytest.fixture(scope="session")
def tiny_dataset(tiny_style):
    return build_dataset(tiny_style, ConditioningSet(()), 10, seed=3)


@pytest.fixture(scope="session")
def tiny_vae(tiny_dataset, tiny_vae_config):
    return train_vae(tiny_dataset, tiny_vae_config).checkpoint


@pytest.fixture(scope="session")
def tiny_ldm(tiny_vae, tiny_dataset, tiny_ldm_config):
    return train_ldm(tiny_vae, tiny_dataset, tiny_ldm_config).checkpoint


@pytest.fixture
def tiny_model(tiny_ldm):
    return LatentDiffusionModel.from_checkpoint(tiny_ldm)
