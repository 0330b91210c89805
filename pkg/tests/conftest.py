import numpy as np
import pytest

from uavrrm.beams import build_beam_gain_table
from uavrrm.channel import generate_dataset
from uavrrm.config import (AnnealConfig, ArrayConfig, ElementPattern,
                           LinkBudget, SceneConfig, boresights_toward_origin)
from uavrrm.env import AssociationEnv


@pytest.fixture(scope="session")
def scene():
    return SceneConfig()


@pytest.fixture(scope="session")
def pattern():
    return ElementPattern()


@pytest.fixture(scope="session")
def array_cfg(scene):
    return ArrayConfig(boresight_az_deg=boresights_toward_origin(scene.bs_positions))


@pytest.fixture(scope="session")
def budget(scene):
    return LinkBudget(tx_power_w=40.0 / scene.num_beams, capacity=scene.num_beams)


@pytest.fixture(scope="session")
def small_dataset(scene):
    return generate_dataset(scene, count=6, seed=123)


@pytest.fixture(scope="session")
def small_tables(small_dataset, pattern, array_cfg):
    anneal = AnnealConfig(seed=123)
    return [build_beam_gain_table(s, pattern, array_cfg, anneal, scenario_index=i)
            for i, s in enumerate(small_dataset)]


@pytest.fixture(scope="session")
def small_env(small_dataset, small_tables, budget):
    return AssociationEnv(small_dataset, small_tables, budget)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
