"""Independent numerical oracles backing the derived test values.

Each suite checks a piece of the engine against a formulation that does not
share code with the path under test: quadrature of the defining convolution
for the wake memory states, the classical finite-wing lift formula for the
spanwise solve, energy conservation for the multibody terms, and minimal-
coordinate pendulum integrations for the constrained-acceleration solve.
Exposed through ``flapsim oracle <suite>`` and reused by the test suite.
"""

import math
from dataclasses import dataclass

import numpy as np

from .aero import (SpanOperator, advance_memory_states, march_prescribed,
                   wagner_phi, WAGNER)
from .dynamics import EomTerms, Simulator, solve_constrained_accel, total_energy
from .model import (GaitSchedule, InitialState, JointWave, load_robot,
                    robot_from_dict, robot_to_dict)


@dataclass
class OracleCheck:
    name: str
    passed: bool
    metric: float
    threshold: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: metric={self.metric:.3e} threshold={self.threshold:.3e} {self.detail}"


# ---------------------------------------------------------------------------
# Wagner / indicial response
# ---------------------------------------------------------------------------

def wagner_suite():
    checks = []
    phi0 = wagner_phi(0.0)
    checks.append(OracleCheck(
        "wagner.start_value", abs(phi0 - 0.5) < 1e-14, abs(phi0 - 0.5), 1e-14,
        "phi(0) = 1 - psi1 - psi2 = 0.5"))
    # direct evaluation of the two-exponential fit at unit normalized time
    expected = 1.0 - 0.165 * math.exp(-0.0455) - 0.335 * math.exp(-0.3)
    phi1 = wagner_phi(1.0)
    checks.append(OracleCheck(
        "wagner.unit_time", abs(phi1 - expected) < 1e-12, abs(phi1 - expected), 1e-12,
        f"phi(1) = {phi1:.5f} (approx 0.59417)"))
    grid = np.linspace(0.0, 100.0, 20001)
    phi = wagner_phi(grid)
    monotone = bool(np.all(np.diff(phi) > 0.0))
    bounded = bool(np.all(phi >= 0.5 - 1e-14) and np.all(phi < 1.0))
    checks.append(OracleCheck(
        "wagner.monotone_bounded", monotone and bounded,
        float(np.min(np.diff(phi))), 0.0, "phi nondecreasing, 0.5 <= phi < 1"))
    checks.append(OracleCheck(
        "wagner.late_time", phi[-1] > 0.985, float(phi[-1]), 0.985, "phi(100)"))
    checks.append(OracleCheck(
        "wagner.asymptote", wagner_phi(1e6) > 1.0 - 1e-6,
        float(wagner_phi(1e6)), 1.0 - 1e-6, "phi -> 1"))
    return checks


# ---------------------------------------------------------------------------
# wake memory states vs quadrature of the defining convolution
# ---------------------------------------------------------------------------

def _convolution_trapezoid(psi, eps, U, b, w_samples, dt):
    """Literal trapezoid quadrature of z(t) = int K e^(-lam (t-tau)) w dtau.

    The running integral is accumulated with exact decay factors between
    samples, which reproduces the trapezoid rule on the shared grid.
    """
    lam = eps * U / b
    K = psi * lam
    decay = math.exp(-lam * dt)
    z = np.empty_like(w_samples)
    z[0] = 0.0
    for k in range(len(w_samples) - 1):
        z[k + 1] = decay * (z[k] + 0.5 * dt * K * w_samples[k]) \
            + 0.5 * dt * K * w_samples[k + 1]
    return z


def memory_suite(dt=1e-4, duration=2.0, U=1.0, b=0.02, freq_hz=1.0):
    checks = []
    n = int(round(duration / dt))
    times = np.arange(n + 1) * dt

    def w_fn(t):
        return np.array([math.sin(2.0 * math.pi * freq_hz * t)])

    z1 = np.zeros(1)
    z2 = np.zeros(1)
    hist1 = np.empty(n + 1)
    hist2 = np.empty(n + 1)
    hist1[0] = hist2[0] = 0.0
    bh = np.array([b])
    for k in range(n):
        t0 = times[k]
        z1, z2 = advance_memory_states(
            z1, z2, lambda tau: w_fn(t0 + tau), U, bh, dt)
        hist1[k + 1] = z1[0]
        hist2[k + 1] = z2[0]

    w_samples = np.sin(2.0 * math.pi * freq_hz * times)
    ref1 = _convolution_trapezoid(WAGNER.psi1, WAGNER.eps1, U, b, w_samples, dt)
    ref2 = _convolution_trapezoid(WAGNER.psi2, WAGNER.eps2, U, b, w_samples, dt)
    for name, ode, ref in (("z1", hist1, ref1), ("z2", hist2, ref2)):
        err = float(np.linalg.norm(ode - ref) / np.linalg.norm(ref))
        checks.append(OracleCheck(
            f"memory.{name}_vs_convolution", err < 1e-3, err, 1e-3,
            f"relative L2 over {duration} s at dt={dt}"))

    # fixed point: constant downwash drives z_i -> psi_i * W
    W = 0.7
    z1 = np.zeros(1)
    z2 = np.zeros(1)
    const = np.array([W])
    slow_tau = b / (WAGNER.eps1 * U)  # slowest decay time constant
    for _ in range(int(round(30.0 * slow_tau / 1e-3))):
        z1, z2 = advance_memory_states(z1, z2, const, U, bh, 1e-3)
    err_fp = max(abs(z1[0] - WAGNER.psi1 * W), abs(z2[0] - WAGNER.psi2 * W))
    checks.append(OracleCheck(
        "memory.steady_fixed_point", err_fp < 1e-8, err_fp, 1e-8,
        "z_i -> psi_i W reproduces the steady indicial limit"))
    return checks


# ---------------------------------------------------------------------------
# classical lifting-line oracle on an elliptic planform
# ---------------------------------------------------------------------------

def elliptic_model(m=16, c0=0.08, span=0.30):
    """Default robot re-chorded to an elliptic planform with m stations."""
    raw = robot_to_dict(load_robot())
    half = 0.5 * span
    ys = np.linspace(-half, half, 501)
    chord = c0 * np.sqrt(np.maximum(1.0 - (ys / half) ** 2, 0.0))
    chord[0] = chord[-1] = 0.0
    raw["span_m"] = span
    raw["chord_table"] = {"station_y_m": ys.tolist(), "chord_m": chord.tolist()}
    raw["n_elements"] = m
    return robot_from_dict(raw)


def liftingline_suite(m=16, alpha=0.05, U=2.0, duration=4.0, dt=1e-3):
    model = elliptic_model(m=m)
    op = SpanOperator(model)
    vn = np.full(m, U * alpha)
    state, cl = march_prescribed(op, vn, U, duration, dt)

    c0 = model.chord0_m
    span = model.span_m
    area = math.pi * c0 * span / 4.0          # elliptic planform area
    aspect = span * span / area
    a0 = model.lift_slope_per_rad
    cl_total = float(np.sum(cl * op.chord * op.dy) / area)
    classical = a0 * alpha / (1.0 + a0 / (math.pi * aspect))
    err = abs(cl_total - classical) / classical
    checks = [OracleCheck(
        "liftingline.elliptic_CL", err < 0.01, err, 0.01,
        f"CL={cl_total:.5f} vs classical {classical:.5f} (AR={aspect:.3f})")]

    # steadiness guard: the march must actually have converged
    state2, cl2 = march_prescribed(op, vn, U, duration + 0.5, dt)
    drift = float(np.max(np.abs(cl2 - cl)) / max(abs(classical), 1e-12))
    checks.append(OracleCheck(
        "liftingline.converged", drift < 1e-4, drift, 1e-4,
        "sectional c_L change over an extra 0.5 s"))
    return checks


# ---------------------------------------------------------------------------
# energy conservation of the multibody terms
# ---------------------------------------------------------------------------

def frozen_gait(qs=0.3, qe=0.2):
    return GaitSchedule(
        waveform="sinusoid", frequency_hz=2.0,
        shoulder=JointWave(0.0, qs, 0.0), elbow=JointWave(0.0, qe, 0.0),
    ).validate()


def energy_suite(duration=10.0, dt=1e-3):
    model = load_robot()
    gait = frozen_gait()
    sim = Simulator(model, gait, np.zeros(3), aero_model="off")
    init = InitialState(
        position_m=np.zeros(3),
        euler_rad=np.zeros(3),
        velocity_mps=np.array([0.3, 0.2, 0.5]),
        euler_rates_radps=np.array([0.05, 0.05, 1.0]),
    )
    full = sim.initial_state(init)
    e0 = total_energy(model, full)
    worst = 0.0
    n = int(round(duration / dt))
    for k in range(n):
        full = sim.step(full, dt)
        if (k + 1) % 50 == 0 or k == n - 1:
            e = total_energy(model, full)
            worst = max(worst, abs(e - e0))
    drift = worst / abs(e0)
    return [OracleCheck(
        "energy.drift", drift < 1e-3, drift, 1e-3,
        f"max |E-E0|/|E0| over {duration} s (aero/thrust off, gait frozen)")]


# ---------------------------------------------------------------------------
# minimal-coordinate pendulum oracle for the constrained solve
# ---------------------------------------------------------------------------

_PEND = dict(m1=0.3, m2=0.2, l1=0.4, l2=0.3, g=9.81)


def _pendulum_terms(theta, theta_d):
    """Textbook planar double pendulum (point masses, relative angles)."""
    m1, m2, l1, l2, g = (_PEND[k] for k in ("m1", "m2", "l1", "l2", "g"))
    c2 = math.cos(theta[1])
    s2 = math.sin(theta[1])
    M = np.array([
        [(m1 + m2) * l1 ** 2 + m2 * l2 ** 2 + 2 * m2 * l1 * l2 * c2,
         m2 * l2 ** 2 + m2 * l1 * l2 * c2],
        [m2 * l2 ** 2 + m2 * l1 * l2 * c2, m2 * l2 ** 2],
    ])
    C = np.array([
        -m2 * l1 * l2 * s2 * (2 * theta_d[0] * theta_d[1] + theta_d[1] ** 2),
        m2 * l1 * l2 * s2 * theta_d[0] ** 2,
    ])
    G = np.array([
        (m1 + m2) * g * l1 * math.sin(theta[0])
        + m2 * g * l2 * math.sin(theta[0] + theta[1]),
        m2 * g * l2 * math.sin(theta[0] + theta[1]),
    ])
    return M, -C - G


def _pendulum_tip(theta):
    l1, l2 = _PEND["l1"], _PEND["l2"]
    return np.array([
        l1 * math.sin(theta[0]) + l2 * math.sin(theta[0] + theta[1]),
        -l1 * math.cos(theta[0]) - l2 * math.cos(theta[0] + theta[1]),
    ])


def _integrate_constrained(theta0, theta_d0, jc, y_ks_fn, duration, dt):
    """RK4 on the toy pendulum with prescribed accelerations via lambda."""
    def deriv(t, x):
        th = x[0:2]
        thd = x[2:4]
        M, h = _pendulum_terms(th, thd)
        terms = EomTerms(M=M, h=h, J_c=jc, u_a=np.zeros(2), u_t=np.zeros(2))
        qdd, _lam = solve_constrained_accel(terms, y_ks_fn(t))
        return np.concatenate([thd, qdd])

    x = np.concatenate([theta0, theta_d0])
    t = 0.0
    n = int(round(duration / dt))
    out = np.empty((n + 1, 4))
    out[0] = x
    for k in range(n):
        k1 = deriv(t, x)
        k2 = deriv(t + 0.5 * dt, x + 0.5 * dt * k1)
        k3 = deriv(t + 0.5 * dt, x + 0.5 * dt * k2)
        k4 = deriv(t + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        out[k + 1] = x
    return out


def pendulum_suite(duration=1.0, dt=2e-4):
    checks = []
    A1, A2 = 2.0, 1.5
    Om = 2.0 * math.pi
    th0 = np.array([0.3, 0.2])

    # (a) both joints prescribed: closed-form double integration is exact
    def y_both(t):
        return np.array([A1 * math.sin(Om * t), A2 * math.cos(Om * t)])

    traj = _integrate_constrained(th0, np.zeros(2), np.eye(2), y_both,
                                  duration, dt)
    times = np.arange(traj.shape[0]) * dt
    th1_ref = th0[0] + A1 * times / Om - A1 * np.sin(Om * times) / Om ** 2
    th2_ref = th0[1] + A2 * (1.0 - np.cos(Om * times)) / Om ** 2
    tip_err = 0.0
    for k in range(traj.shape[0]):
        tip = _pendulum_tip(traj[k, 0:2])
        ref = _pendulum_tip((th1_ref[k], th2_ref[k]))
        tip_err = max(tip_err, float(np.linalg.norm(tip - ref)))
    checks.append(OracleCheck(
        "pendulum.full_prescription", tip_err < 1e-6, tip_err, 1e-6,
        "tip trajectory vs closed-form double integration"))

    # (b) shoulder prescribed, elbow free: accelerating-pivot pendulum oracle
    def y_one(t):
        return np.array([A1 * math.sin(Om * t)])

    traj = _integrate_constrained(th0, np.zeros(2), np.array([[1.0, 0.0]]),
                                  y_one, duration, dt)

    l1, l2, g = _PEND["l1"], _PEND["l2"], _PEND["g"]

    def theta1(t):
        return th0[0] + A1 * t / Om - A1 * math.sin(Om * t) / Om ** 2

    def theta1_d(t):
        return A1 * (1.0 - math.cos(Om * t)) / Om

    def pivot_acc(t):
        th = theta1(t)
        thd = theta1_d(t)
        thdd = A1 * math.sin(Om * t)
        ax = l1 * (-math.sin(th) * thd ** 2 + math.cos(th) * thdd)
        az = l1 * (math.cos(th) * thd ** 2 + math.sin(th) * thdd)
        return ax, az

    def deriv(t, x):
        phi, phid = x
        ax, az = pivot_acc(t)
        phidd = -(ax * math.cos(phi) + az * math.sin(phi) + g * math.sin(phi)) / l2
        return np.array([phid, phidd])

    x = np.array([th0[0] + th0[1], 0.0])
    t = 0.0
    tip_err = 0.0
    for k in range(traj.shape[0] - 1):
        k1 = deriv(t, x)
        k2 = deriv(t + 0.5 * dt, x + 0.5 * dt * k1)
        k3 = deriv(t + 0.5 * dt, x + 0.5 * dt * k2)
        k4 = deriv(t + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        tip_ours = _pendulum_tip(traj[k + 1, 0:2])
        th1 = theta1(t)
        tip_oracle = np.array([
            l1 * math.sin(th1) + l2 * math.sin(x[0]),
            -l1 * math.cos(th1) - l2 * math.cos(x[0]),
        ])
        tip_err = max(tip_err, float(np.linalg.norm(tip_ours - tip_oracle)))
    checks.append(OracleCheck(
        "pendulum.partial_constraint", tip_err < 1e-6, tip_err, 1e-6,
        "free elbow vs independent accelerating-pivot formulation"))
    return checks


SUITES = {
    "wagner": wagner_suite,
    "memory": memory_suite,
    "liftingline": liftingline_suite,
    "energy": energy_suite,
    "pendulum": pendulum_suite,
}


def run_suite(name, **kwargs):
    """Run one suite (or 'all'); returns (checks, all_passed)."""
    if name == "all":
        checks = []
        for fn in SUITES.values():
            checks.extend(fn())
        return checks, all(c.passed for c in checks)
    if name not in SUITES:
        raise KeyError(f"unknown oracle suite {name!r} (have {', '.join(SUITES)} or 'all')")
    checks = SUITES[name](**kwargs)
    return checks, all(c.passed for c in checks)
