#!/usr/bin/env python3
"""Controller tuning report for the shipped default gains.

Simulates the inner attitude loops on the linearized plant J theta'' = tau
(J from the robot's generalized inertia at the reference configuration) and
the outer velocity loop on the tilt plant vdot = -g * pitch, printing the
closed-loop poles and settle metrics.  Run after changing gains or the
robot's mass distribution; the defaults in flapsim.model.default_gains were
chosen with this script (targets: recover |angle| < 0.01 rad within 2 s from
a 0.2 rad disturbance, all poles strictly stable, outer loop well inside the
inner-loop bandwidth).
"""

import numpy as np

from flapsim.control import (PidState, attitude_inertia, attitude_loop_poles,
                             pid_step)
from flapsim.model import default_gains, load_robot

G = 9.81


def settle_time(gains, inertia, theta0=0.2, band=0.01, dt=1e-3, horizon=4.0):
    theta, rate = theta0, 0.0
    state = PidState()
    last_outside = 0.0
    for k in range(int(horizon / dt)):
        out, state = pid_step(gains, -theta, -rate, dt, state)
        rate += out / inertia * dt
        theta += rate * dt
        if abs(theta) >= band:
            last_outside = (k + 1) * dt
    return last_outside


def outer_loop_response(gains, inertia, v0=1.0, dt=1e-3, horizon=12.0):
    """Velocity error decay with the inner loop in the loop."""
    vx, pitch, rate = v0, 0.0, 0.0
    vel_state, att_state = PidState(), PidState()
    for _ in range(int(horizon / dt)):
        out_v, vel_state = pid_step(gains.vx, -vx, 0.0, dt, vel_state)
        pitch_sp = -out_v
        out_a, att_state = pid_step(gains.pitch, pitch_sp - pitch, -rate, dt, att_state)
        rate += out_a / inertia * dt
        pitch += rate * dt
        vx += -G * pitch * dt  # flight-sign pitch: nose-up decelerates
    return vx


def main():
    robot = load_robot()
    gains = default_gains()
    j_roll, j_pitch = attitude_inertia(robot)
    print(f"attitude inertias: J_roll={j_roll:.4g} kg m^2, J_pitch={j_pitch:.4g} kg m^2")
    for axis, j in (("roll", j_roll), ("pitch", j_pitch)):
        g = getattr(gains, axis)
        poles = attitude_loop_poles(g, j)
        ts = settle_time(g, j)
        print(f"{axis}: kp={g.kp} ki={g.ki} kd={g.kd}")
        print(f"  poles: {np.sort(poles.real)} (max Re {poles.real.max():.3f})")
        print(f"  settle to |angle|<0.01 rad from 0.2 rad: {ts:.3f} s (target < 2 s)")
    v_end = outer_loop_response(gains, j_pitch)
    print(f"outer vx loop: 1.0 m/s error after 12 s -> {v_end:+.4f} m/s")


if __name__ == "__main__":
    main()
