"""Unsteady lifting-line aerodynamics with wake memory states.

The spanwise circulation is a truncated sine series in the collocation angle
theta (y = (S/2) cos theta).  Each station carries two wake memory states
(z1, z2) that turn the step-response convolution into a pair of first-order
ODEs; equating the series form of the sectional lift coefficient with the
wake-memory form at every station yields the linear solve for the series
coefficient rates.  A quasi-steady baseline (no wake memory) is provided for
comparison runs.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import CollocationError, FreestreamError, ValidationError


@dataclass(frozen=True)
class WagnerConstants:
    """Two-exponential (Jones) fit of the indicial lift response."""

    psi1: float = 0.165
    psi2: float = 0.335
    eps1: float = 0.0455
    eps2: float = 0.3

    @property
    def phi0(self):
        return 1.0 - self.psi1 - self.psi2


WAGNER = WagnerConstants()
PHI0 = WAGNER.phi0  # = 0.5, the impulsive-start lift fraction


def wagner_phi(t_tilde, constants=WAGNER):
    """Indicial lift fraction at normalized time t_tilde = U t / b (>= 0)."""
    t = np.asarray(t_tilde, dtype=float)
    if np.any(t < 0.0):
        raise ValidationError("t_tilde", "normalized time must be non-negative")
    c = constants
    out = 1.0 - c.psi1 * np.exp(-c.eps1 * t) - c.psi2 * np.exp(-c.eps2 * t)
    return float(out) if np.isscalar(t_tilde) else out


@dataclass(eq=False)
class AeroState:
    """Circulation series coefficients and per-element wake memory states."""

    a: np.ndarray
    z1: np.ndarray
    z2: np.ndarray

    @classmethod
    def zeros(cls, m):
        return cls(np.zeros(m), np.zeros(m), np.zeros(m))

    def pack(self):
        return np.concatenate([self.a, self.z1, self.z2])

    @classmethod
    def unpack(cls, vec, m):
        return cls(vec[0:m].copy(), vec[m:2 * m].copy(), vec[2 * m:3 * m].copy())


class SpanOperator:
    """Precomputed collocation matrices for one robot geometry.

    ``sinn[i, j] = sin((j+1) theta_i)`` and ``dsin[i, j] = (j+1) sinn[i, j] /
    sin(theta_i)``; the collocation system matrix is (a0 c0 / U) * sinn, whose
    inverse is cached (stations interior, so sinn is well conditioned).
    """

    def __init__(self, model):
        geo = model.elements
        m = geo.theta.size
        n = np.arange(1, m + 1, dtype=float)
        self.theta = geo.theta
        self.chord = geo.chord
        self.bhalf = geo.bhalf
        self.dy = geo.dy
        self.m = m
        self.a0 = model.lift_slope_per_rad
        self.c0 = float(model.chord0_m)
        self.span = model.span_m
        self.sinn = np.ascontiguousarray(np.sin(np.outer(geo.theta, n)))
        self.dsin = np.ascontiguousarray(self.sinn * n[None, :] / np.sin(geo.theta)[:, None])
        self.condition = float(np.linalg.cond(self.sinn))
        if not np.isfinite(self.condition) or self.condition > 1e12:
            raise CollocationError(self.condition)
        self.sinn_inv = np.ascontiguousarray(np.linalg.inv(self.sinn))
        self.min_freestream = model.min_freestream_mps

    def require_freestream(self, U):
        if U < self.min_freestream:
            raise FreestreamError(
                f"freestream {U:.3g} m/s below the {self.min_freestream:.3g} m/s floor "
                "the wake model requires"
            )

    def rates(self, state, v_n, U):
        """(adot, z1dot, z2dot, w_y, w, c_L) at the current instant."""
        self.require_freestream(U)
        w = WAGNER
        return K.aero_rates(
            state.a, state.z1, state.z2, v_n, U,
            self.sinn, self.sinn_inv, self.dsin, self.chord, self.bhalf,
            self.a0, self.c0, self.span, w.psi1, w.psi2, w.eps1, w.eps2, w.phi0,
        )

    def induced_downwash(self, a, U):
        if U <= 0.0:
            raise FreestreamError(
                "induced downwash needs a positive freestream (the circulation scales with U)"
            )
        return -(self.a0 * self.c0 * U / (4.0 * self.span)) * (self.dsin @ a)

    def residual(self, state, adot, v_n, U):
        """Relative residual of the collocation system after solving for adot."""
        wy = self.induced_downwash(state.a, U)
        w = v_n + wy
        cl = (self.a0 / U) * (w * PHI0 + state.z1 + state.z2)
        lhs = self.a0 * (self.c0 / self.chord) * (self.sinn @ state.a) \
            + (self.a0 * self.c0 / U) * (self.sinn @ adot)
        scale = max(float(np.max(np.abs(cl))), 1e-30)
        return float(np.max(np.abs(lhs - cl))) / scale


def induced_downwash(a, model, U):
    """Vortex-induced downwash at every station for coefficients ``a``."""
    return SpanOperator(model).induced_downwash(np.asarray(a, dtype=float), U)


def solve_fourier_rates(state, v_n, model, U, operator=None):
    """Coefficient rates solving the collocation system at each station."""
    op = operator if operator is not None else SpanOperator(model)
    adot, _z1d, _z2d, _wy, _w, _cl = op.rates(state, np.asarray(v_n, dtype=float), U)
    return adot


def sectional_lift(state, w, U, lift_slope):
    """c_L = (a0/U) (w phi(0) + z1 + z2) per element."""
    return (lift_slope / U) * (np.asarray(w, dtype=float) * PHI0 + state.z1 + state.z2)


def memory_state_rates(z1, z2, w, U, bhalf):
    """Wake-memory ODE right-hand side (exact Leibniz derivative of the
    defining convolution integrals)."""
    k = U / np.asarray(bhalf, dtype=float)
    c = WAGNER
    z1dot = c.psi1 * c.eps1 * k * w - c.eps1 * k * z1
    z2dot = c.psi2 * c.eps2 * k * w - c.eps2 * k * z2
    return z1dot, z2dot


def advance_memory_states(z1, z2, w, U, bhalf, dt):
    """One RK4 step of the wake memory states.

    ``w`` is either the downwash array held over the step or a callable
    ``w(tau)`` giving the downwash at local time tau in [0, dt] (used when a
    prescribed downwash history is marched standalone; the coupled simulation
    integrates these states inside the full-state RK4 instead).
    """
    if dt <= 0.0:
        raise ValidationError("dt", "step size must be positive")
    if callable(w):
        w0, wh, w1 = w(0.0), w(0.5 * dt), w(dt)
    else:
        w0 = wh = w1 = np.asarray(w, dtype=float)

    def f(z1v, z2v, wv):
        return memory_state_rates(z1v, z2v, wv, U, bhalf)

    k1 = f(z1, z2, w0)
    k2 = f(z1 + 0.5 * dt * k1[0], z2 + 0.5 * dt * k1[1], wh)
    k3 = f(z1 + 0.5 * dt * k2[0], z2 + 0.5 * dt * k2[1], wh)
    k4 = f(z1 + dt * k3[0], z2 + dt * k3[1], w1)
    z1n = z1 + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    z2n = z2 + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    return z1n, z2n


def march_prescribed(op, v_n, U, duration, dt):
    """March the aero states under a prescribed normal-flow history.

    ``v_n`` is an (m,) array held constant or a callable t -> (m,) array.
    Used by the steady-state and convergence oracles; the coupled simulation
    advances the same states inside the full-state RK4 instead.  Returns the
    final (state, c_L).
    """
    m = op.m
    state = AeroState.zeros(m)

    def vn_at(t):
        return v_n(t) if callable(v_n) else v_n

    def deriv(t, x):
        s = AeroState.unpack(x, m)
        adot, z1dot, z2dot, _wy, _w, _cl = op.rates(s, vn_at(t), U)
        return np.concatenate([adot, z1dot, z2dot])

    x = state.pack()
    n_steps = int(round(duration / dt))
    t = 0.0
    for _ in range(n_steps):
        k1 = deriv(t, x)
        k2 = deriv(t + 0.5 * dt, x + 0.5 * dt * k1)
        k3 = deriv(t + 0.5 * dt, x + 0.5 * dt * k2)
        k4 = deriv(t + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
    state = AeroState.unpack(x, m)
    _adot, _z1d, _z2d, _wy, w, cl = op.rates(state, vn_at(t), U)
    return state, cl


def quasi_steady_baseline(elements, model):
    """Instantaneous-incidence stand-in: c_L = a0 atan2(v_n, v_e).

    This is a generic quasi-steady baseline (no rotational or added-mass
    terms) used for model comparison runs, not a calibrated replacement for
    a full quasi-steady treatment.
    """
    return K.quasi_steady_cl(elements.v_n, elements.v_e, model.lift_slope_per_rad)


def assemble_forces(cl, elements, model, w_y=None):
    """Per-element force vectors and the generalized aerodynamic force.

    Sectional lift 0.5 rho V_rel^2 c dy c_L acts at the quarter chord,
    perpendicular to the local relative flow in the plane containing the
    element normal; the vortex-induced downwash tilts it downstream by
    w_y/V_rel (induced drag) and the configured profile-drag coefficient
    adds a downstream component.
    """
    cl = np.ascontiguousarray(cl, dtype=float)
    if w_y is None:
        w_y = np.zeros_like(cl)
    forces, u_a = K.aero_forces(
        cl, np.ascontiguousarray(w_y, dtype=float),
        elements.v_n, elements.v_e, elements.normal, elements.chordwise,
        elements.chord, elements.dy, elements.jacobian,
        model.air_density_kgpm3, model.profile_drag_coeff,
    )
    return forces, u_a
