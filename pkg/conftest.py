import numpy as np
import pytest

from lifter.data.augmentation import AugmentationConfig
from lifter.data.synthetic import SynthConfig, generate_synthetic
from lifter.trainer import TrainConfig


def _tiny_synth_config(**overrides) -> SynthConfig:
    params = dict(n_subjects=7, n_actions=2, frames_per_action=6, n_cameras=5, seed=0)
    params.update(overrides)
    return SynthConfig(**params)


def _tiny_train_config(**overrides) -> TrainConfig:
    params = dict(epochs=1, batch_size=32, hidden=32, m=8, dropout=0.1, workers=1, prefetch=2,
                  augmentation=AugmentationConfig(step_deg=60.0), seed=0)
    params.update(overrides)
    return TrainConfig(**params)


@pytest.fixture
def synth_config():
    return _tiny_synth_config


@pytest.fixture
def train_config():
    return _tiny_train_config


@pytest.fixture(scope="session")
def tiny_dataset():
    """7 subjects x 2 actions x 6 frames x 5 ring cameras"""
    return generate_synthetic(_tiny_synth_config())


@pytest.fixture
def gen():
    return np.random.default_rng(1234)
