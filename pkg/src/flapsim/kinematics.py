"""Forward kinematics of the 5-body chain and blade-element placement.

All public functions are pure in their inputs and safe to call concurrently.
World frame: x forward, y left, z up.  Joint angles fold the left wing; the
right wing mirrors it across the body x-z plane, so a single (q_s, q_e) pair
drives both sides.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import GimbalLockError, ValidationError

BODY_NAMES = ("body", "left_proximal", "left_distal", "right_proximal", "right_distal")

COORD_NAMES = ("p_x", "p_y", "p_z", "roll", "pitch", "yaw", "q_s", "q_e")

_PITCH_LIMIT = 0.5 * np.pi


@dataclass(eq=False)
class GeneralizedState:
    """Generalized coordinates q = [p, euler(Z-Y-X), q_s, q_e] and rates."""

    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self):
        self.q = np.ascontiguousarray(self.q, dtype=float)
        self.qd = np.ascontiguousarray(self.qd, dtype=float)
        if self.q.shape != (8,) or self.qd.shape != (8,):
            raise ValidationError("state", f"expected 8+8 coordinates, got {self.q.shape} + {self.qd.shape}")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qd))):
            raise ValidationError("state", "state must be finite")
        if abs(self.q[4]) >= _PITCH_LIMIT:
            raise GimbalLockError(self.q[4])

    @property
    def position(self):
        return self.q[0:3]

    @property
    def euler(self):
        return self.q[3:6]

    @property
    def joints(self):
        return self.q[6:8]

    @property
    def velocity(self):
        return self.qd[0:3]


class BodyPoses(NamedTuple):
    rotations: np.ndarray    # (5,3,3) body -> world
    positions: np.ndarray    # (5,3) COM positions
    anchors: np.ndarray      # (5,3) [body com, shoulder L, elbow L, shoulder R, elbow R]
    joint_axes: np.ndarray   # (4,3) world axes [sh L, el L, sh R, el R]


class BladeElements(NamedTuple):
    """Quarter-chord kinematics of all spanwise stations (struct of arrays)."""

    theta: np.ndarray      # (m,) collocation angles
    y: np.ndarray          # (m,) spanwise stations
    chord: np.ndarray      # (m,)
    bhalf: np.ndarray      # (m,) half chord
    dy: np.ndarray         # (m,) strip widths
    position: np.ndarray   # (m,3) world
    velocity: np.ndarray   # (m,3) world
    normal: np.ndarray     # (m,3) upper-surface normal
    chordwise: np.ndarray  # (m,3) toward the leading edge
    v_n: np.ndarray        # (m,) wind-relative normal flow, + lifts
    v_e: np.ndarray        # (m,) wind-relative edgewise flow
    jacobian: np.ndarray   # (m,3,8) point velocity maps


def rotation_zyx(euler):
    """Body-to-world rotation for Z-Y-X (yaw-pitch-roll) Euler angles."""
    return K._rot_zyx(euler[0], euler[1], euler[2])


def euler_rate_map(euler):
    """E(theta) with world angular velocity = E @ euler_rates."""
    return K._euler_rate_map(euler[0], euler[1], euler[2])


def forward_kinematics(model, state):
    """Poses of the five bodies; the right wing mirrors the left."""
    P = model.kin_params
    R, com, anchors, axw = K.forward_kinematics(
        state.q, P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom
    )
    return BodyPoses(R, com, anchors, axw)


def body_jacobians(model, state):
    """(Jv, Jw) stacks of COM linear and angular velocity maps, (5,3,8) each."""
    P = model.kin_params
    _R, _c, _a, _x, _E, Jv, Jw = K.body_jacobians(
        state.q, P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom
    )
    return Jv, Jw


def blade_elements(model, state, wind=None):
    """Kinematic state of every blade element under the given steady wind."""
    if wind is None:
        wind = np.zeros(3)
    wind = np.ascontiguousarray(wind, dtype=float)
    P = model.kin_params
    geo = model.elements
    pos, vel, nvec, cvec, vn, ve, jac = K.element_states(
        state.q, state.qd, wind, geo.body, geo.local,
        P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom,
    )
    return BladeElements(
        theta=geo.theta, y=geo.y, chord=geo.chord, bhalf=geo.bhalf, dy=geo.dy,
        position=pos, velocity=vel, normal=nvec, chordwise=cvec,
        v_n=vn, v_e=ve, jacobian=jac,
    )


def point_jacobian(model, state, body, local_offset):
    """3x8 velocity map of a point given in a body frame (from its anchor)."""
    P = model.kin_params
    R, com, anchors, axw = K.forward_kinematics(
        state.q, P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom
    )
    E = euler_rate_map(state.euler)
    pt = anchors[body] + R[body] @ np.asarray(local_offset, dtype=float)
    return K._point_jacobian(pt, body, state.q[0:3], E, anchors, axw)


def force_jacobian(model, state, point):
    """8x3 map B of an inertial force at an attachment into generalized forces.

    ``point`` is ("element", i) for a blade-element quarter chord or
    ("thruster", k) for a thruster mount.  B = (d p_dot / d qd)^T, so for any
    rates B^T qd is the inertial velocity of the attachment point.
    """
    kind, idx = point
    if kind == "element":
        geo = model.elements
        if not 0 <= idx < geo.theta.size:
            raise ValidationError("point", f"element index {idx} out of range")
        J = point_jacobian(model, state, int(geo.body[idx]), geo.local[idx])
    elif kind == "thruster":
        if not 0 <= idx < len(model.thrusters):
            raise ValidationError("point", f"thruster index {idx} out of range")
        J = point_jacobian(model, state, 0, model.thrusters[idx].position_m)
    else:
        raise ValidationError("point", f"unknown attachment kind {kind!r}")
    return J.T.copy()


def thruster_generalized_force(model, state, thrusts):
    """Generalized force produced by per-thruster scalar thrusts [N]."""
    pos, axis, _tmax = model.thruster_arrays
    thrusts = np.ascontiguousarray(thrusts, dtype=float)
    if thrusts.shape != (pos.shape[0],):
        raise ValidationError("thrusts", f"expected {pos.shape[0]} values")
    P = model.kin_params
    return K.thruster_generalized(
        state.q, pos, axis, thrusts,
        P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom,
    )
