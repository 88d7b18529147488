import numpy as np
import pytest

from planloc.raycast import RaycastConfig
from planloc.synth import SynthPlanSpec, generate_plan


@pytest.fixture(scope="session")
def plan_raster():
    """A 20x15 m partitioned plan with facade windows, shared across tests."""
    return generate_plan(SynthPlanSpec(), seed=2)


@pytest.fixture(scope="session")
def fast_cfg():
    """Coarser marching for tests that do not probe sampling accuracy."""
    return RaycastConfig(step=0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
