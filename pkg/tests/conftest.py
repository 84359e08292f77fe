from __future__ import annotations

import numpy as np
import pytest
import torch
from hypothesis import settings

from sgi.config import TrainSettings, get_profile

# single shared CPU core: wall-clock deadlines are meaningless here
settings.register_profile("slow-box", deadline=None)
settings.load_profile("slow-box")
from sgi.data.fixtures import make_fixture_dataset
from sgi.training import ModelBundle, location_prior, prepare_scenes


@pytest.fixture(scope="session")
def fixture_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixtures")
    make_fixture_dataset(root, n_train=3, n_val=1, seed=0)
    return root


@pytest.fixture(scope="session")
def profile():
    return get_profile("fixture")


@pytest.fixture(scope="session")
def scenes_and_index(fixture_root, profile):
    return prepare_scenes(fixture_root, profile, "train", seed=0)


@pytest.fixture(scope="session")
def tiny_settings():
    return TrainSettings(width_mult=0.125, seed=0)


@pytest.fixture(scope="session")
def tiny_bundle(profile, tiny_settings, scenes_and_index):
    torch.manual_seed(0)
    bundle = ModelBundle.build(profile.num_classes, tiny_settings)
    scenes, index = scenes_and_index
    bundle.location_prior = location_prior(scenes, index)
    return bundle


@pytest.fixture
def rng():
    return np.random.default_rng(0)
