import numpy as np
import pytest

from flapsim.control import (CascadeState, PidState,
                             VelocitySetpoint, allocation_matrix,
                             attitude_inertia, attitude_loop_poles, cascade,
                             mix, pid_step)
from flapsim.errors import MixerError
from flapsim.model import PidGains, default_gains, robot_from_dict, robot_to_dict


def simple_gains(kp=2.0, ki=0.0, kd=0.0, i_clamp=1.0, out_clamp=10.0):
    return PidGains(kp=kp, ki=ki, kd=kd, i_clamp=i_clamp, out_clamp=out_clamp)


# ---------------------------------------------------------------------------
# PID primitive
# ---------------------------------------------------------------------------

def test_zero_error_zero_output():
    out, state = pid_step(simple_gains(), 0.0, 0.0, 1e-3, PidState())
    assert out == 0.0
    assert state.integral == 0.0


def test_proportional_law():
    out, _ = pid_step(simple_gains(kp=2.0), 0.1, 0.0, 1e-3, PidState())
    assert out == pytest.approx(0.2)


def test_integrator_clamps_under_constant_error():
    g = simple_gains(kp=0.0, ki=1.0, i_clamp=0.05, out_clamp=10.0)
    state = PidState()
    outs = []
    for _ in range(1000):
        out, state = pid_step(g, 1.0, 0.0, 1e-2, state)
        outs.append(out)
    assert state.integral == pytest.approx(0.05)
    assert max(outs) <= 0.05 + 1e-12


def test_output_clamp():
    g = simple_gains(kp=100.0, out_clamp=0.5)
    out, _ = pid_step(g, 1.0, 0.0, 1e-3, PidState())
    assert out == 0.5


def test_pid_linearity_of_unclamped_response(rng):
    """Scaling the error history scales the output proportionally."""
    g = simple_gains(kp=1.3, ki=0.7, kd=0.2, i_clamp=1e9, out_clamp=1e9)
    errors = rng.normal(0, 0.1, 200)
    rates = rng.normal(0, 0.1, 200)
    s1, s2 = PidState(), PidState()
    for e, r in zip(errors, rates):
        o1, s1 = pid_step(g, e, r, 1e-2, s1)
        o2, s2 = pid_step(g, 3.0 * e, 3.0 * r, 1e-2, s2)
        assert o2 == pytest.approx(3.0 * o1, rel=1e-12, abs=1e-15)


# ---------------------------------------------------------------------------
# cascade
# ---------------------------------------------------------------------------

def test_hover_at_setpoint_gives_trim_only():
    gains = default_gains()
    cmd, _ = cascade(gains, np.zeros(8), np.zeros(8), VelocitySetpoint(),
                     1e-3, CascadeState())
    assert cmd.tau_x_nm == pytest.approx(0.0)
    assert cmd.tau_y_nm == pytest.approx(0.0, abs=1e-15)
    assert cmd.collective_n == gains.collective_n


def test_forward_velocity_error_commands_nose_down():
    """+vx error (want to speed up) -> negative pitch setpoint."""
    gains = default_gains()
    cmd, _ = cascade(gains, np.zeros(8), np.zeros(8),
                     VelocitySetpoint(vx_mps=1.0), 1e-3, CascadeState())
    assert cmd.pitch_setpoint_rad < 0.0


def test_closed_loop_settles_from_roll_disturbance(robot):
    """Linearized attitude plant J theta'' = tau with the default gains:
    0.2 rad roll recovers to |roll| < 0.01 rad within 2 s."""
    gains = default_gains()
    j_roll, _ = attitude_inertia(robot)
    theta, rate = 0.2, 0.0
    state = PidState()
    dt = 1e-3
    last_outside = 0.0
    for k in range(int(3.0 / dt)):
        out, state = pid_step(gains.roll, -theta, -rate, dt, state)
        rate += out / j_roll * dt
        theta += rate * dt
        if abs(theta) >= 0.01:
            last_outside = (k + 1) * dt
    assert last_outside < 2.0


def test_closed_loop_poles_strictly_stable(robot):
    gains = default_gains()
    j_roll, j_pitch = attitude_inertia(robot)
    for g, j in ((gains.roll, j_roll), (gains.pitch, j_pitch)):
        poles = attitude_loop_poles(g, j)
        assert np.max(poles.real) < -1e-3


def test_full_cascade_regulates_velocity(robot):
    """Outer loop on the tilt plant vdot = -g * pitch drives vx to zero."""
    gains = default_gains()
    _, j_pitch = attitude_inertia(robot)
    vx, pitch_fs, rate_fs = 1.0, 0.0, 0.0  # flight-sign pitch
    state = CascadeState()
    dt = 1e-3
    for _ in range(int(12.0 / dt)):
        q = np.zeros(8)
        qd = np.zeros(8)
        qd[0] = vx
        q[4] = -pitch_fs   # Euler pitch is nose-down positive
        qd[4] = -rate_fs
        cmd, state = cascade(gains, q, qd, VelocitySetpoint(), dt, state)
        tau_fs = -cmd.tau_y_nm
        rate_fs += tau_fs / j_pitch * dt
        pitch_fs += rate_fs * dt
        vx += -9.81 * pitch_fs * dt
    assert abs(vx) < 0.05
    assert abs(pitch_fs) < 0.02


# ---------------------------------------------------------------------------
# mixer
# ---------------------------------------------------------------------------

def test_zero_request_splits_collective(robot):
    res = mix((0.0, 0.0), 0.4, robot)
    assert res.thrusts == pytest.approx(np.full(4, 0.1))
    assert not res.saturated


def test_pure_roll_request_differential(robot):
    res = mix((0.01, 0.0), 0.4, robot)
    t = res.thrusts
    # thruster order: FL(+x+y), FR(+x-y), BL(-x+y), BR(-x-y)
    assert t[0] == pytest.approx(t[2])      # left pair equal
    assert t[1] == pytest.approx(t[3])      # right pair equal
    assert t[0] > t[1]                      # left/right differ (+roll = left up? no: +y side pushes harder)
    assert res.achieved[1] == pytest.approx(0.01)


def test_mixer_round_trip_off_saturation(robot, rng):
    A = allocation_matrix(robot)
    for _ in range(50):
        target = np.array([rng.uniform(0.2, 0.8),
                           rng.uniform(-0.02, 0.02),
                           rng.uniform(-0.02, 0.02)])
        res = mix((target[1], target[2]), target[0], robot)
        if not res.saturated:
            assert A @ res.thrusts == pytest.approx(target, abs=1e-12)


def test_saturation_flagged_and_bounded(robot):
    res = mix((10.0, 0.0), 0.4, robot)
    assert res.saturated
    _pos, _axis, tmax = robot.thruster_arrays
    assert np.all(res.thrusts >= 0.0)
    assert np.all(res.thrusts <= tmax + 1e-12)
    assert abs(res.achieved[1]) < 10.0  # achieved < requested


def test_mixer_rejects_degenerate_layout(robot):
    raw = robot_to_dict(robot)
    raw["thrusters"] = [
        {"position_m": [0.0, 0.0, 0.0], "axis": [0.0, 0.0, 1.0], "max_thrust_n": 1.0}
    ] * 4
    degenerate = robot_from_dict(raw)
    with pytest.raises(MixerError):
        mix((0.01, 0.0), 0.4, degenerate)
