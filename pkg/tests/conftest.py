import numpy as np
import pytest

from flapsim.model import load_gait, load_robot, load_scenario


@pytest.fixture(scope="session")
def robot():
    return load_robot()


@pytest.fixture(scope="session")
def gait():
    return load_gait()


@pytest.fixture(scope="session")
def scenario():
    return load_scenario()


@pytest.fixture()
def rng():
    return np.random.default_rng(42)


def random_state(rng, scale=0.5, rate=1.0):
    """Random generalized state away from the gimbal singularity."""
    from flapsim.kinematics import GeneralizedState

    q = rng.uniform(-scale, scale, 8)
    q[4] = rng.uniform(-0.4, 0.4)  # pitch inside the guard
    qd = rng.uniform(-rate, rate, 8)
    return GeneralizedState(q, qd)
