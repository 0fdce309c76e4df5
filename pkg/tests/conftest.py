import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pickstow.kinematics import DHRow, RobotModel, ur5_model  # noqa: E402


@pytest.fixture(scope="session")
def ur5():
    return ur5_model()


@pytest.fixture(scope="session")
def zero_chain():
    return RobotModel(tuple(DHRow(0.0, 0.0, 0.0) for _ in range(6)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def workcell():
    from pickstow.planning.workcell import build_workcell
    return build_workcell()


@pytest.fixture(scope="session")
def run_config():
    from pickstow.orchestrator.config import RunConfig
    return RunConfig()


@pytest.fixture(scope="session")
def perception_models(workcell, run_config):
    """Shared bank and forest cache; training is the slow part of most tests."""
    from pickstow.orchestrator.runner import PerceptionModels
    return PerceptionModels(workcell, run_config)
