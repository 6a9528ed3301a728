"""Stabilizer controller: cascaded PID loops and a quad-style thruster mixer.

Only roll and pitch are stabilized and only x/y velocity is considered;
yaw is uncontrolled and altitude is an open-loop collective trim.

Sign conventions.  The controller works in the usual flight-control signs:
roll positive = right wing down, pitch positive = nose up.  The state's
Z-Y-X Euler angles on the forward-left-up body frame give roll with the
same sign but pitch with the opposite one (positive Euler pitch is nose
down), so the measured pitch is negated at the controller boundary and the
pitch moment is negated again on the way out to body torques.  With that:

* +vx velocity error commands a negative (nose-down) pitch setpoint,
* +vy (leftward) velocity error commands a negative (left-wing-down) roll
  setpoint,

both of which tilt the collective thrust toward the wanted direction.
Derivative terms use the measured rate (gyro style), not error
differentiation, to avoid setpoint kick.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MixerError, ValidationError


@dataclass
class PidState:
    integral: float = 0.0


def pid_step(gains, error, error_rate, dt, state):
    """One PID update with integrator clamping (anti-windup).

    Returns (output, new_state); output is clamped to +/- out_clamp.
    """
    if dt <= 0.0:
        raise ValidationError("dt", "controller step must be positive")
    integral = state.integral + error * dt
    integral = min(max(integral, -gains.i_clamp), gains.i_clamp)
    out = gains.kp * error + gains.ki * integral + gains.kd * error_rate
    out = min(max(out, -gains.out_clamp), gains.out_clamp)
    return out, PidState(integral)


@dataclass
class CascadeState:
    roll: PidState = field(default_factory=PidState)
    pitch: PidState = field(default_factory=PidState)
    vx: PidState = field(default_factory=PidState)
    vy: PidState = field(default_factory=PidState)


@dataclass
class VelocitySetpoint:
    vx_mps: float = 0.0
    vy_mps: float = 0.0
    roll_trim_rad: float = 0.0   # flight-control sign (right wing down +)
    pitch_trim_rad: float = 0.0  # flight-control sign (nose up +)


@dataclass
class CascadeCommand:
    roll_setpoint_rad: float   # flight-control signs, for inspection
    pitch_setpoint_rad: float
    tau_x_nm: float            # body torques, FLU axes
    tau_y_nm: float
    collective_n: float


def cascade(gains, q, qd, setpoint, dt, state):
    """Outer x/y-velocity loops feeding inner roll/pitch PID loops.

    ``q``/``qd`` are the generalized coordinates and rates (only the body
    pose/velocity entries are read).  Returns (CascadeCommand, new_state).
    """
    vx = qd[0]
    vy = qd[1]
    roll_meas = q[3]        # Euler roll == flight-control roll
    pitch_meas = -q[4]      # Euler pitch is nose-down positive
    roll_rate = qd[3]
    pitch_rate = -qd[4]

    out_vx, vx_state = pid_step(gains.vx, setpoint.vx_mps - vx, 0.0, dt, state.vx)
    out_vy, vy_state = pid_step(gains.vy, setpoint.vy_mps - vy, 0.0, dt, state.vy)
    pitch_sp = -out_vx + setpoint.pitch_trim_rad
    roll_sp = -out_vy + setpoint.roll_trim_rad

    out_roll, roll_state = pid_step(
        gains.roll, roll_sp - roll_meas, -roll_rate, dt, state.roll)
    out_pitch, pitch_state = pid_step(
        gains.pitch, pitch_sp - pitch_meas, -pitch_rate, dt, state.pitch)

    command = CascadeCommand(
        roll_setpoint_rad=roll_sp,
        pitch_setpoint_rad=pitch_sp,
        tau_x_nm=out_roll,
        tau_y_nm=-out_pitch,
        collective_n=gains.collective_n,
    )
    new_state = CascadeState(roll=roll_state, pitch=pitch_state,
                             vx=vx_state, vy=vy_state)
    return command, new_state


@dataclass
class MixResult:
    thrusts: np.ndarray     # per-thruster command [N], clamped to [0, max]
    achieved: np.ndarray    # realized (collective force, tau_x, tau_y)
    requested: np.ndarray
    saturated: bool


def allocation_matrix(model):
    """3xN map from thrust scalars to (z force, roll torque, pitch torque)."""
    pos, axis, _tmax = model.thruster_arrays
    n = pos.shape[0]
    A = np.zeros((3, n))
    for i in range(n):
        torque = np.cross(pos[i], axis[i])
        A[0, i] = axis[i, 2]
        A[1, i] = torque[0]
        A[2, i] = torque[1]
    return A


def mix(moments, collective, model):
    """Least-squares allocation of roll/pitch moments plus collective.

    ``moments`` = (tau_x, tau_y) body torques.  Commands are clamped to
    [0, max thrust]; the realized wrench is reported so saturation is
    visible to the caller.
    """
    pos, axis, tmax = model.thruster_arrays
    if pos.shape[0] < 4:
        raise MixerError(f"need at least 4 thrusters, layout has {pos.shape[0]}")
    A = allocation_matrix(model)
    if np.linalg.matrix_rank(A[1:, :], tol=1e-12) < 2:
        raise MixerError("thruster layout spans no roll/pitch moment space")
    target = np.array([collective, moments[0], moments[1]], dtype=float)
    raw = np.linalg.pinv(A) @ target
    thrusts = np.clip(raw, 0.0, tmax)
    achieved = A @ thrusts
    saturated = bool(np.any(np.abs(raw - thrusts) > 1e-12))
    return MixResult(thrusts=thrusts, achieved=achieved, requested=target,
                     saturated=saturated)


def attitude_inertia(model):
    """(J_roll, J_pitch) of the whole chain at the reference configuration."""
    from .dynamics import mass_matrix
    from .kinematics import GeneralizedState

    M = mass_matrix(model, GeneralizedState(np.zeros(8), np.zeros(8)))
    return float(M[3, 3]), float(M[4, 4])


def attitude_loop_matrix(gains, inertia):
    """Closed-loop state matrix of one inner axis on the J theta'' = tau plant.

    State [theta, theta_dot, integral(error)] with zero setpoint.
    """
    return np.array([
        [0.0, 1.0, 0.0],
        [-gains.kp / inertia, -gains.kd / inertia, gains.ki / inertia],
        [-1.0, 0.0, 0.0],
    ])


def attitude_loop_poles(gains, inertia):
    return np.linalg.eigvals(attitude_loop_matrix(gains, inertia))
