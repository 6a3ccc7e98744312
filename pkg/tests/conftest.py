import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from minudesc.pipeline import Pipeline
from minudesc.subspace import train
from minudesc.synth import SynthParams, build_training_set, generate_database

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

TRAIN_SEED = 1000


@pytest.fixture(scope="session")
def transform():
    """PCA+LDA transform trained on 30 synthetic fingers at default settings."""
    return train(build_training_set(30, SynthParams(), seed=TRAIN_SEED))


@pytest.fixture(scope="session")
def pipeline(transform):
    return Pipeline(transform=transform)


@pytest.fixture(scope="session")
def finger_pool(pipeline):
    """Templates of 120 synthetic fingers, 2 impressions each."""
    db = generate_database(77, 120, SynthParams(impressions=2))
    return [[pipeline.template(img) for img, _ in imps] for _, imps in db]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
