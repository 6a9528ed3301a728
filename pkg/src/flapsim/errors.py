"""Exception hierarchy shared across the package."""


class FlapsimError(Exception):
    """Base class for all errors raised by flapsim."""


class ConfigError(FlapsimError):
    """A configuration file could not be read or parsed."""


class ValidationError(FlapsimError):
    """A configuration value violates an invariant.

    ``field`` names the offending entry (dotted path into the config).
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class SimulationError(FlapsimError):
    """Base class for runtime failures inside a simulation."""


class DivergenceError(SimulationError):
    """A state component became non-finite during integration."""

    def __init__(self, time_s, component, message=""):
        self.time_s = time_s
        self.component = component
        detail = f" ({message})" if message else ""
        super().__init__(
            f"state diverged at t={time_s:.6g} s: first non-finite component "
            f"is {component!r}{detail}"
        )


class GimbalLockError(SimulationError):
    """Body pitch reached the +/- pi/2 singularity of the Euler chart."""

    def __init__(self, pitch_rad, time_s=None):
        self.pitch_rad = pitch_rad
        self.time_s = time_s
        at = f" at t={time_s:.6g} s" if time_s is not None else ""
        super().__init__(f"pitch angle {pitch_rad:.4f} rad hit the gimbal-lock guard{at}")


class FreestreamError(SimulationError):
    """Freestream airspeed fell below the floor the wake model requires."""


class CollocationError(SimulationError):
    """The spanwise collocation system is singular or badly conditioned."""

    def __init__(self, condition, message="collocation matrix is near-singular"):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3g})")


class ConstraintError(SimulationError):
    """The joint-constraint Gram matrix is singular."""


class MixerError(FlapsimError):
    """The thruster layout cannot realize the requested moments."""
