"""Constrained equations of motion and time integration.

The multibody dynamics are

    M(q) qdd = h(q, qd) + u_a + u_t + J_c' lambda
    J_c qdd  = y_ks(t)

where the constant selector J_c picks the shoulder/elbow rows and y_ks is
the prescribed gait acceleration; lambda follows algebraically.  The coupled
state [q, qd, a, z1, z2] (16 + 3m entries) marches with classical fixed-step
RK4, re-evaluating the aerodynamics at every stage.  Joint positions and
rates are re-synchronized to the gait after each step to kill drift.

Tethered (load-cell) mode clamps the body coordinates: only the aero states
integrate, the joints follow the gait analytically, and the clamp reaction
wrench at the mount is reported.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .aero import PHI0, AeroState, SpanOperator
from .errors import (ConstraintError, DivergenceError, GimbalLockError,
                     ValidationError)
from .kinematics import COORD_NAMES, _PITCH_LIMIT
from .model import GRAVITY_MPS2

# constant selector rows picking (qdd_s, qdd_e)
J_C = np.zeros((2, 8))
J_C[0, 6] = 1.0
J_C[1, 7] = 1.0

FD_STEP = 1e-6  # central-difference step for dM/dq


@dataclass(eq=False)
class EomTerms:
    M: np.ndarray          # (8,8)
    h: np.ndarray          # (8,)
    J_c: np.ndarray        # (2,8)
    u_a: np.ndarray        # (8,)
    u_t: np.ndarray        # (8,)


@dataclass(eq=False)
class FullState:
    """Generalized coordinates/rates plus aero memory, stamped with time."""

    q: np.ndarray
    qd: np.ndarray
    aero: AeroState
    t: float = 0.0

    def copy(self):
        return FullState(self.q.copy(), self.qd.copy(),
                         AeroState(self.aero.a.copy(), self.aero.z1.copy(),
                                   self.aero.z2.copy()), self.t)


def mass_matrix(model, state):
    """Generalized inertia; symmetric positive definite by construction."""
    P = model.kin_params
    M = K.mass_matrix(state.q, P.masses, P.inertias,
                      P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValidationError(
            "model", "mass matrix is not positive definite; check masses and inertias"
        ) from None
    return M


def bias_forces(model, state):
    """Gravity + Coriolis/centrifugal generalized force h(q, qd)."""
    P = model.kin_params
    return K.bias_forces(state.q, state.qd, P.masses, P.inertias,
                         GRAVITY_MPS2, FD_STEP,
                         P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom)


def solve_constrained_accel(terms, y_ks):
    """Acceleration and constraint force enforcing J_c qdd = y_ks.

    lambda = (J_c M^-1 J_c')^-1 (y_ks - J_c M^-1 (h + u_a + u_t)),
    qdd    = M^-1 (h + u_a + u_t + J_c' lambda).
    """
    rhs = terms.h + terms.u_a + terms.u_t
    nc = terms.J_c.shape[0]
    try:
        sol = np.linalg.solve(terms.M, np.column_stack([rhs, terms.J_c.T]))
    except np.linalg.LinAlgError as exc:
        raise ConstraintError(f"mass matrix solve failed: {exc}") from exc
    x1 = sol[:, 0]
    X2 = sol[:, 1:]
    gram = terms.J_c @ X2
    try:
        lam = np.linalg.solve(gram, np.asarray(y_ks, dtype=float) - terms.J_c @ x1)
    except np.linalg.LinAlgError:
        raise ConstraintError(
            f"constraint Gram matrix is singular (cond {np.linalg.cond(gram):.3g})"
        ) from None
    qdd = x1 + X2 @ lam
    return qdd, lam


def total_energy(model, state):
    """Kinetic plus gravitational potential energy of the 5-body chain."""
    P = model.kin_params
    M = K.mass_matrix(state.q, P.masses, P.inertias,
                      P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom)
    _R, com, _a, _x = K.forward_kinematics(
        state.q, P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom)
    kinetic = 0.5 * float(state.qd @ M @ state.qd)
    potential = GRAVITY_MPS2 * float(P.masses @ com[:, 2])
    return kinetic + potential


def _component_name(idx, m):
    if idx < 8:
        return COORD_NAMES[idx]
    if idx < 16:
        return "d" + COORD_NAMES[idx - 8]
    idx -= 16
    if idx < m:
        return f"a[{idx}]"
    idx -= m
    if idx < m:
        return f"z1[{idx}]"
    return f"z2[{idx - m}]"


class Simulator:
    """Owns one simulation instance (strictly sequential stepping).

    Distinct instances share no mutable state and may run concurrently.
    """

    def __init__(self, model, gait, wind, aero_model="unsteady",
                 clamp_body=False, clamp_pose=None, check_residuals=False):
        self.model = model
        self.gait = gait
        self.wind = np.ascontiguousarray(wind, dtype=float)
        self.aero_model = aero_model
        self.clamp_body = clamp_body
        self.check_residuals = check_residuals
        self.params = model.kin_params
        self.geometry = model.elements
        self.m = model.n_elements
        self.op = SpanOperator(model) if aero_model == "unsteady" else None
        self.max_constraint_residual = 0.0
        self.max_collocation_residual = 0.0
        if clamp_body:
            pose = np.zeros(6) if clamp_pose is None else np.asarray(clamp_pose, dtype=float)
            if pose.shape != (6,):
                raise ValidationError("clamp_pose", "expected 6 body coordinates")
            self.clamp_pose = pose

    # -- shared pieces ----------------------------------------------------

    def _elements_raw(self, q, qd):
        P = self.params
        g = self.geometry
        return K.element_states(q, qd, self.wind, g.body, g.local,
                                P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom)

    def _freestream(self, qd):
        return float(np.linalg.norm(self.wind - qd[0:3]))

    def _aero_terms(self, q, qd, a, z1, z2):
        """(u_a, adot, z1dot, z2dot) at one instant/stage."""
        m = self.m
        if self.aero_model == "off":
            return np.zeros(8), np.zeros(m), np.zeros(m), np.zeros(m)
        pos, vel, nvec, cvec, vn, ve, jac = self._elements_raw(q, qd)
        g = self.geometry
        if self.aero_model == "quasi_steady":
            cl = K.quasi_steady_cl(vn, ve, self.model.lift_slope_per_rad)
            wy = np.zeros(m)
            adot = z1dot = z2dot = np.zeros(m)
        else:
            U = self._freestream(qd)
            state = AeroState(a, z1, z2)
            adot, z1dot, z2dot, wy, w, cl = self.op.rates(state, vn, U)
            if self.check_residuals:
                res = self.op.residual(state, adot, vn, U)
                self.max_collocation_residual = max(self.max_collocation_residual, res)
        _forces, u_a = K.aero_forces(cl, wy, vn, ve, nvec, cvec, g.chord, g.dy,
                                     jac, self.model.air_density_kgpm3,
                                     self.model.profile_drag_coeff)
        return u_a, adot, z1dot, z2dot

    def _eom(self, t, q, qd, u_a, u_t):
        P = self.params
        M = K.mass_matrix(q, P.masses, P.inertias,
                          P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom)
        h = K.bias_forces(q, qd, P.masses, P.inertias, GRAVITY_MPS2, FD_STEP,
                          P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom)
        terms = EomTerms(M=M, h=h, J_c=J_C, u_a=u_a, u_t=u_t)
        y_ks = self.gait.y_ks(t)
        qdd, lam = solve_constrained_accel(terms, y_ks)
        res = float(np.max(np.abs(qdd[6:8] - y_ks)))
        self.max_constraint_residual = max(self.max_constraint_residual, res)
        return qdd, lam

    # -- free / guard-stabilized stepping ---------------------------------

    def _free_derivative(self, t, x, u_t):
        m = self.m
        q = x[0:8]
        qd = x[8:16]
        if abs(q[4]) >= _PITCH_LIMIT:
            raise GimbalLockError(q[4], t)
        u_a, adot, z1dot, z2dot = self._aero_terms(
            q, qd, x[16:16 + m], x[16 + m:16 + 2 * m], x[16 + 2 * m:16 + 3 * m])
        qdd, _lam = self._eom(t, q, qd, u_a, u_t)
        return np.concatenate([qd, qdd, adot, z1dot, z2dot])

    def _tethered_derivative(self, t, xa):
        m = self.m
        if self.aero_model != "unsteady":
            return np.zeros(3 * m)
        q, qd = self._clamped_state(t)
        _pos, _vel, _n, _c, vn, _ve, _jac = self._elements_raw(q, qd)
        U = self._freestream(qd)
        state = AeroState(xa[0:m], xa[m:2 * m], xa[2 * m:3 * m])
        adot, z1dot, z2dot, _wy, _w, _cl = self.op.rates(state, vn, U)
        if self.check_residuals:
            res = self.op.residual(state, adot, vn, U)
            self.max_collocation_residual = max(self.max_collocation_residual, res)
        return np.concatenate([adot, z1dot, z2dot])

    def _clamped_state(self, t):
        g = self.gait.eval(t)
        q = np.empty(8)
        q[0:6] = self.clamp_pose
        q[6] = g.q_s
        q[7] = g.q_e
        qd = np.zeros(8)
        qd[6] = g.qd_s
        qd[7] = g.qd_e
        return q, qd

    def initial_state(self, initial=None):
        """FullState at t = 0 from a scenario initial block (free modes) or
        the clamp pose (tethered)."""
        aero = AeroState.zeros(self.m)
        if self.clamp_body:
            q, qd = self._clamped_state(0.0)
            return FullState(q, qd, aero, 0.0)
        q = np.zeros(8)
        qd = np.zeros(8)
        if initial is not None:
            q[0:3] = initial.position_m
            q[3:6] = initial.euler_rad
            qd[0:3] = initial.velocity_mps
            qd[3:6] = initial.euler_rates_radps
        g = self.gait.eval(0.0)
        q[6], q[7] = g.q_s, g.q_e
        qd[6], qd[7] = g.qd_s, g.qd_e
        return FullState(q, qd, aero, 0.0)

    def step(self, full, dt, u_t=None):
        """Advance one RK4 step; u_t (generalized) is held over the step."""
        if dt <= 0.0:
            raise ValidationError("dt", "step size must be positive")
        if u_t is None:
            u_t = np.zeros(8)
        t = full.t
        if self.clamp_body:
            x = full.aero.pack()
            k1 = self._tethered_derivative(t, x)
            k2 = self._tethered_derivative(t + 0.5 * dt, x + 0.5 * dt * k1)
            k3 = self._tethered_derivative(t + 0.5 * dt, x + 0.5 * dt * k2)
            k4 = self._tethered_derivative(t + dt, x + dt * k3)
            xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            self._check_finite(xn, t + dt, offset=16)
            q, qd = self._clamped_state(t + dt)
            return FullState(q, qd, AeroState.unpack(xn, self.m), t + dt)

        x = np.concatenate([full.q, full.qd, full.aero.pack()])
        k1 = self._free_derivative(t, x, u_t)
        k2 = self._free_derivative(t + 0.5 * dt, x + 0.5 * dt * k1, u_t)
        k3 = self._free_derivative(t + 0.5 * dt, x + 0.5 * dt * k2, u_t)
        k4 = self._free_derivative(t + dt, x + dt * k3, u_t)
        xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        self._check_finite(xn, t + dt, offset=0)
        q = xn[0:8].copy()
        qd = xn[8:16].copy()
        # re-synchronize the joint coordinates to the gait (drift projection)
        g = self.gait.eval(t + dt)
        q[6], q[7] = g.q_s, g.q_e
        qd[6], qd[7] = g.qd_s, g.qd_e
        if abs(q[4]) >= _PITCH_LIMIT:
            raise GimbalLockError(q[4], t + dt)
        return FullState(q, qd, AeroState.unpack(xn[16:], self.m), t + dt)

    def _check_finite(self, x, t, offset):
        if np.all(np.isfinite(x)):
            return
        bad = int(np.argmax(~np.isfinite(x)))
        raise DivergenceError(t, _component_name(bad + offset, self.m))

    # -- instantaneous diagnostics (used when emitting trace rows) --------

    def diagnostics(self, full, u_t=None):
        """Forces, constraint loads, and the mount reaction at one instant."""
        if u_t is None:
            u_t = np.zeros(8)
        q, qd = full.q, full.qd
        m = self.m
        g = self.geometry
        pos, vel, nvec, cvec, vn, ve, jac = self._elements_raw(q, qd)
        wy = np.zeros(m)
        if self.aero_model == "off":
            cl = np.zeros(m)
            forces = np.zeros((m, 3))
            u_a = np.zeros(8)
        else:
            if self.aero_model == "quasi_steady":
                cl = K.quasi_steady_cl(vn, ve, self.model.lift_slope_per_rad)
            else:
                U = self._freestream(qd)
                wy = self.op.induced_downwash(full.aero.a, U)
                w = vn + wy
                cl = (self.model.lift_slope_per_rad / U) * (
                    w * PHI0 + full.aero.z1 + full.aero.z2)
            forces, u_a = K.aero_forces(
                cl, wy, vn, ve, nvec, cvec, g.chord, g.dy, jac,
                self.model.air_density_kgpm3, self.model.profile_drag_coeff)

        y_ks = self.gait.y_ks(full.t)
        P = self.params
        M = K.mass_matrix(q, P.masses, P.inertias,
                          P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom)
        h = K.bias_forces(q, qd, P.masses, P.inertias, GRAVITY_MPS2, FD_STEP,
                          P.r_sh, P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom)
        if self.clamp_body:
            qdd = np.zeros(8)
            qdd[6:8] = y_ks
            gen = M @ qdd - h - u_a - u_t
            lam = gen[6:8]
            mount_force, mount_torque = self._mount_wrench(q, gen[0:6])
        else:
            terms = EomTerms(M=M, h=h, J_c=J_C, u_a=u_a, u_t=u_t)
            _qdd, lam = solve_constrained_accel(terms, y_ks)
            mount_force = np.full(3, np.nan)
            mount_torque = np.full(3, np.nan)
        return {
            "elements_y": g.y,
            "forces": forces,
            "cl": cl,
            "w_y": wy,
            "u_a": u_a,
            "lambda": lam,
            "mount_force": mount_force,
            "mount_torque": mount_torque,
        }

    def _mount_wrench(self, q, gen6):
        """Convert the clamp generalized force into a wrench at the mount.

        gen_p = F and gen_theta = E'((R r_m) x F + tau), so
        tau = E^-T gen_theta - (R r_m) x F.
        """
        F = gen6[0:3]
        E = K._euler_rate_map(q[3], q[4], q[5])
        R = K._rot_zyx(q[3], q[4], q[5])
        arm = R @ self.model.mount_offset_m
        tau = np.linalg.solve(E.T, gen6[3:6]) - np.cross(arm, F)
        return F, tau


def step(model, gait, full, wind, u_t, dt, aero_model="unsteady", clamp_body=False):
    """One integration step (functional form; builds a throwaway Simulator).

    Loops should construct a :class:`Simulator` once and call its ``step``.
    """
    clamp_pose = full.q[0:6] if clamp_body else None
    sim = Simulator(model, gait, wind, aero_model=aero_model,
                    clamp_body=clamp_body, clamp_pose=clamp_pose)
    return sim.step(full, dt, u_t=u_t)
