import math
from types import SimpleNamespace

import numpy as np
import pytest

from flapsim.aero import (PHI0, WAGNER, AeroState, SpanOperator,
                          advance_memory_states, assemble_forces,
                          induced_downwash, march_prescribed,
                          quasi_steady_baseline, sectional_lift,
                          solve_fourier_rates, wagner_phi)
from flapsim.errors import FreestreamError, ValidationError
from flapsim.kinematics import GeneralizedState, blade_elements
from flapsim.model import ElementGeometry, robot_from_dict, robot_to_dict
from flapsim import oracles


def make_model(robot, **patch):
    raw = robot_to_dict(robot)
    raw.update(patch)
    return robot_from_dict(raw)


# ---------------------------------------------------------------------------
# Wagner indicial response
# ---------------------------------------------------------------------------

def test_wagner_start_value():
    # 1 - psi1 - psi2 = 0.5 (impulsive-start lift fraction)
    assert wagner_phi(0.0) == pytest.approx(0.5, abs=1e-14)
    assert PHI0 == pytest.approx(0.5, abs=1e-14)


def test_wagner_asymptote():
    assert wagner_phi(1e6) > 1.0 - 1e-6


def test_wagner_unit_time_value():
    expected = 1.0 - 0.165 * math.exp(-0.0455) - 0.335 * math.exp(-0.3)
    assert wagner_phi(1.0) == pytest.approx(expected, abs=1e-14)
    assert wagner_phi(1.0) == pytest.approx(0.59417, abs=1e-5)


def test_wagner_rejects_negative_time():
    with pytest.raises(ValidationError):
        wagner_phi(-0.1)


def test_wagner_bounds_and_monotonicity():
    grid = np.linspace(0.0, 100.0, 10001)
    phi = wagner_phi(grid)
    assert np.all(phi >= 0.5 - 1e-14)
    assert np.all(phi < 1.0)
    assert np.all(np.diff(phi) > 0.0)


# ---------------------------------------------------------------------------
# induced downwash
# ---------------------------------------------------------------------------

def test_zero_circulation_zero_downwash(robot):
    wy = induced_downwash(np.zeros(robot.n_elements), robot, U=1.0)
    assert wy == pytest.approx(np.zeros(robot.n_elements))


def test_downwash_single_modes(robot):
    # odd station count puts a station exactly at theta = pi/2 (y = 0)
    m5 = make_model(robot, n_elements=5)
    center = 2
    assert m5.elements.theta[center] == pytest.approx(np.pi / 2)
    A, U = 0.37, 1.2
    a = np.zeros(5)
    a[0] = A  # first mode: sin(theta)/sin(theta) = 1
    wy = induced_downwash(a, m5, U)
    expected = -(m5.lift_slope_per_rad * m5.chord0_m * U / (4 * m5.span_m)) * A
    assert wy[center] == pytest.approx(expected)
    a = np.zeros(5)
    a[1] = A  # second mode: sin(2 theta) = 0 at pi/2
    wy = induced_downwash(a, m5, U)
    assert wy[center] == pytest.approx(0.0, abs=1e-15)


def test_downwash_requires_freestream(robot):
    with pytest.raises(FreestreamError):
        induced_downwash(np.zeros(robot.n_elements), robot, U=0.0)
    with pytest.raises(FreestreamError):
        SpanOperator(robot).rates(AeroState.zeros(robot.n_elements),
                                  np.zeros(robot.n_elements), 0.01)


# ---------------------------------------------------------------------------
# wake memory states
# ---------------------------------------------------------------------------

def test_memory_equilibrium_at_rest():
    z1, z2 = advance_memory_states(np.zeros(3), np.zeros(3), np.zeros(3),
                                   U=1.0, bhalf=np.full(3, 0.02), dt=1e-3)
    assert z1 == pytest.approx(np.zeros(3))
    assert z2 == pytest.approx(np.zeros(3))


def test_memory_fixed_point_recovers_steady_lift():
    """Constant downwash: z1 -> psi1 W, z2 -> psi2 W, c_L -> a0 W / U."""
    U, b, W = 1.0, 0.02, 0.6
    bh = np.array([b])
    z1 = np.zeros(1)
    z2 = np.zeros(1)
    w = np.array([W])
    tau = b / (WAGNER.eps1 * U)
    for _ in range(int(round(30 * tau / 1e-3))):
        z1, z2 = advance_memory_states(z1, z2, w, U, bh, 1e-3)
    assert z1[0] == pytest.approx(WAGNER.psi1 * W, abs=1e-9)
    assert z2[0] == pytest.approx(WAGNER.psi2 * W, abs=1e-9)
    a0 = 6.0
    state = AeroState(np.zeros(1), z1, z2)
    cl = sectional_lift(state, w, U, a0)
    assert cl[0] == pytest.approx(a0 * W / U, rel=1e-8)


def test_memory_linearity_in_downwash(rng):
    """The memory ODE is linear: doubling the history doubles the states."""
    U, bh = 1.5, np.array([0.03, 0.05])
    z1a = np.zeros(2); z2a = np.zeros(2)
    z1b = np.zeros(2); z2b = np.zeros(2)
    for k in range(400):
        w = np.array([math.sin(0.05 * k), math.cos(0.03 * k)])
        z1a, z2a = advance_memory_states(z1a, z2a, w, U, bh, 1e-3)
        z1b, z2b = advance_memory_states(z1b, z2b, 2.0 * w, U, bh, 1e-3)
    assert z1b == pytest.approx(2.0 * z1a, rel=1e-13)
    assert z2b == pytest.approx(2.0 * z2a, rel=1e-13)


def test_memory_ode_matches_convolution_quadrature():
    checks = oracles.memory_suite(dt=1e-4, duration=1.0)
    assert all(c.passed for c in checks), "\n".join(c.line() for c in checks)


# ---------------------------------------------------------------------------
# collocation solve
# ---------------------------------------------------------------------------

def test_homogeneous_system_gives_zero_rates(robot):
    m = robot.n_elements
    adot = solve_fourier_rates(AeroState.zeros(m), np.zeros(m), robot, U=1.0)
    assert adot == pytest.approx(np.zeros(m), abs=1e-14)


def test_single_element_closed_form(robot):
    """m = 1 collapses the collocation system to scalar algebra."""
    theta = np.array([np.pi / 2])
    c0 = 0.08
    geo = ElementGeometry(
        theta=theta, y=np.array([0.0]), chord=np.array([c0]),
        bhalf=np.array([c0 / 2]), dy=np.array([0.15]),
        body=np.zeros(1, dtype=np.int64), local=np.zeros((1, 3)),
    )
    stub = SimpleNamespace(elements=geo, lift_slope_per_rad=6.0, chord0_m=c0,
                           span_m=0.3, min_freestream_mps=0.1)
    op = SpanOperator(stub)
    a0, U, S = 6.0, 2.0, 0.3
    a1, z1, z2, vn = 0.3, 0.1, -0.05, 0.4
    state = AeroState(np.array([a1]), np.array([z1]), np.array([z2]))
    adot, _z1d, _z2d, wy, w, cl = op.rates(state, np.array([vn]), U)
    # scalar inversion of the single collocation equation
    w_expected = vn - (a0 * c0 * U / (4 * S)) * a1
    cl_expected = (a0 / U) * (w_expected * PHI0 + z1 + z2)
    adot_expected = (U / (a0 * c0)) * (cl_expected - a0 * c0 * a1 / c0)
    assert w[0] == pytest.approx(w_expected, rel=1e-14)
    assert adot[0] == pytest.approx(adot_expected, rel=1e-12)


def test_collocation_residual_tiny(robot, rng):
    op = SpanOperator(robot)
    m = robot.n_elements
    for _ in range(20):
        state = AeroState(rng.normal(0, 0.1, m), rng.normal(0, 0.1, m),
                          rng.normal(0, 0.1, m))
        vn = rng.normal(0, 0.5, m)
        U = rng.uniform(0.5, 3.0)
        adot, *_ = op.rates(state, vn, U)
        assert op.residual(state, adot, vn, U) < 1e-10


def test_elliptic_steady_state_matches_classical_lifting_line():
    checks = oracles.liftingline_suite(m=16, alpha=0.05)
    assert all(c.passed for c in checks), "\n".join(c.line() for c in checks)


def test_collocation_is_well_conditioned(robot):
    assert SpanOperator(robot).condition < 10.0


# ---------------------------------------------------------------------------
# sectional lift
# ---------------------------------------------------------------------------

def test_sectional_lift_zero():
    state = AeroState.zeros(3)
    cl = sectional_lift(state, np.zeros(3), U=1.0, lift_slope=6.0)
    assert cl == pytest.approx(np.zeros(3))


def test_sectional_lift_impulsive_start_is_half_steady():
    a0, U, W = 6.0, 1.0, 0.4
    fresh = AeroState.zeros(1)
    cl0 = sectional_lift(fresh, np.array([W]), U, a0)
    steady = AeroState(np.zeros(1), np.array([WAGNER.psi1 * W]),
                       np.array([WAGNER.psi2 * W]))
    cl_inf = sectional_lift(steady, np.array([W]), U, a0)
    assert cl0[0] == pytest.approx(0.5 * cl_inf[0], rel=1e-12)
    assert cl_inf[0] == pytest.approx(a0 * W / U, rel=1e-12)


# ---------------------------------------------------------------------------
# quasi-steady baseline
# ---------------------------------------------------------------------------

def test_quasi_steady_zero_normal_flow(robot):
    els = blade_elements(robot, GeneralizedState(np.zeros(8), np.zeros(8)),
                         wind=np.array([-1.0, 0.0, 0.0]))
    cl = quasi_steady_baseline(els, robot)
    assert cl == pytest.approx(np.zeros(robot.n_elements), abs=1e-14)


def test_quasi_steady_small_angle(robot):
    qd = np.zeros(8)
    qd[2] = -0.02  # gentle plunge: v_n / v_e = 0.02
    els = blade_elements(robot, GeneralizedState(np.zeros(8), qd),
                         wind=np.array([-1.0, 0.0, 0.0]))
    cl = quasi_steady_baseline(els, robot)
    assert cl == pytest.approx(robot.lift_slope_per_rad * els.v_n / els.v_e, rel=1e-3)


def test_quasi_steady_overpredicts_unsteady_steady_state():
    """No induced downwash in the baseline, so it sits above the 3-D value."""
    model = oracles.elliptic_model(m=16)
    op = SpanOperator(model)
    U, alpha = 2.0, 0.05
    vn = np.full(16, U * alpha)
    _state, cl = march_prescribed(op, vn, U, duration=4.0, dt=1e-3)
    baseline = model.lift_slope_per_rad * np.arctan2(vn, np.full(16, U))
    assert np.all(baseline > cl)
    assert np.sum(baseline * op.chord * op.dy) > np.sum(cl * op.chord * op.dy)


# ---------------------------------------------------------------------------
# force assembly
# ---------------------------------------------------------------------------

def test_zero_lift_zero_generalized_force(robot):
    dragless = make_model(robot, profile_drag_coeff=0.0)
    els = blade_elements(dragless, GeneralizedState(np.zeros(8), np.zeros(8)),
                         wind=np.array([-1.0, 0.0, 0.0]))
    forces, u_a = assemble_forces(np.zeros(dragless.n_elements), els, dragless)
    assert forces == pytest.approx(np.zeros_like(forces))
    assert u_a == pytest.approx(np.zeros(8))


def test_single_element_force_maps_to_translation(robot):
    els = blade_elements(robot, GeneralizedState(np.zeros(8), np.zeros(8)),
                         wind=np.array([-1.0, 0.0, 0.0]))
    cl = np.zeros(robot.n_elements)
    cl[4] = 0.8
    dragless = make_model(robot, profile_drag_coeff=0.0)
    forces, u_a = assemble_forces(cl, els, dragless)
    assert u_a[0:3] == pytest.approx(forces[4])
    # level wing, pure headwind: lift points straight up
    assert forces[4][2] > 0.0
    assert forces[4][0] == pytest.approx(0.0, abs=1e-15)


def test_lift_magnitude_and_induced_tilt(robot):
    els = blade_elements(robot, GeneralizedState(np.zeros(8), np.zeros(8)),
                         wind=np.array([-2.0, 0.0, 0.0]))
    dragless = make_model(robot, profile_drag_coeff=0.0)
    cl = np.zeros(robot.n_elements)
    cl[6] = 1.0
    wy = np.zeros(robot.n_elements)
    wy[6] = -0.2  # downwash tilts the force downstream by wy/V
    forces, _u_a = assemble_forces(cl, els, dragless, w_y=wy)
    V = 2.0
    qS = 0.5 * dragless.air_density_kgpm3 * V**2 * els.chord[6] * els.dy[6]
    eps = 0.2 / V
    f = forces[6]
    assert np.linalg.norm(f) == pytest.approx(qS, rel=1e-12)
    assert f[2] == pytest.approx(qS * math.cos(eps), rel=1e-12)
    assert f[0] == pytest.approx(-qS * math.sin(eps), rel=1e-12)  # drag downstream


def test_symmetric_flow_has_no_roll_or_yaw(robot, rng):
    """Mirror-pair cancellation: symmetric state and wind null the lateral
    generalized forces."""
    for _ in range(5):
        q = np.zeros(8)
        q[0], q[2] = rng.normal(0, 0.2, 2)
        q[4] = rng.uniform(-0.3, 0.3)
        q[6], q[7] = rng.uniform(-0.5, 0.5, 2)
        qd = np.zeros(8)
        qd[0], qd[2] = rng.normal(0, 0.5, 2)
        qd[4] = rng.normal(0, 0.5)
        qd[6], qd[7] = rng.normal(0, 3.0, 2)
        st = GeneralizedState(q, qd)
        els = blade_elements(robot, st, wind=np.array([-1.0, 0.0, 0.0]))
        op = SpanOperator(robot)
        state = AeroState.zeros(robot.n_elements)
        _adot, _z1, _z2, wy, _w, cl = op.rates(state, els.v_n, 1.0)
        _forces, u_a = assemble_forces(cl, els, robot, w_y=wy)
        assert abs(u_a[1]) < 1e-14  # side force
        assert abs(u_a[3]) < 1e-14  # roll
        assert abs(u_a[5]) < 1e-14  # yaw
