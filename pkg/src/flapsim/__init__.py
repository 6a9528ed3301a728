"""Flight-dynamics engine for a tail-less flapping-wing micro aerial vehicle.

Constrained multibody equations of motion coupled to an unsteady
lifting-line aerodynamic model with wake memory states, a guard stabilizer
controller, and a scenario harness reproducing the tethered load-cell
protocol.
"""

__version__ = "0.1.0"

from .backend import BACKEND, USING_NUMBA
from .errors import (CollocationError, ConfigError, ConstraintError,
                     DivergenceError, FlapsimError, FreestreamError,
                     GimbalLockError, MixerError, SimulationError,
                     ValidationError)
from .model import (GaitSchedule, RobotModel, ScenarioConfig, gait_eval,
                    load_gait, load_robot, load_scenario)

__all__ = [
    "BACKEND", "USING_NUMBA", "__version__",
    "FlapsimError", "ConfigError", "ValidationError", "SimulationError",
    "DivergenceError", "GimbalLockError", "FreestreamError",
    "CollocationError", "ConstraintError", "MixerError",
    "RobotModel", "GaitSchedule", "ScenarioConfig",
    "load_robot", "load_gait", "load_scenario", "gait_eval",
]
