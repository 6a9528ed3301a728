"""Hot numeric kernels (numba-compiled when the backend allows).

Everything here operates on plain float64 arrays so a single source serves
both the numba and the pure-numpy backend.  Layout conventions:

* generalized coordinates ``q = [px, py, pz, roll, pitch, yaw, q_s, q_e]``
* world frame: x forward, y left, z up; body frame coincides at q = 0
* body rotation ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)`` (Z-Y-X Euler)
* bodies indexed 0 main, 1 left proximal, 2 left distal, 3 right proximal,
  4 right distal; the right side mirrors the left across the body x-z plane
  (mirrored offsets/axes are precomputed, the joint angle enters with sign -1)

Per-body "anchor" points carry the chain: body COM for the main body, the
shoulder joint for proximal segments, the elbow joint for distal segments.
Local offsets passed to the point kernels are expressed in the owning body's
frame relative to its anchor.
"""

import numpy as np

from .backend import jit_kernel


@jit_kernel
def _rot_zyx(roll, pitch, yaw):
    cr = np.cos(roll)
    sr = np.sin(roll)
    cp = np.cos(pitch)
    sp = np.sin(pitch)
    cy = np.cos(yaw)
    sy = np.sin(yaw)
    R = np.empty((3, 3))
    R[0, 0] = cy * cp
    R[0, 1] = cy * sp * sr - sy * cr
    R[0, 2] = cy * sp * cr + sy * sr
    R[1, 0] = sy * cp
    R[1, 1] = sy * sp * sr + cy * cr
    R[1, 2] = sy * sp * cr - cy * sr
    R[2, 0] = -sp
    R[2, 1] = cp * sr
    R[2, 2] = cp * cr
    return R


@jit_kernel
def _euler_rate_map(roll, pitch, yaw):
    # world angular velocity = E @ [droll, dpitch, dyaw]
    cp = np.cos(pitch)
    sp = np.sin(pitch)
    cy = np.cos(yaw)
    sy = np.sin(yaw)
    E = np.empty((3, 3))
    E[0, 0] = cy * cp
    E[0, 1] = -sy
    E[0, 2] = 0.0
    E[1, 0] = sy * cp
    E[1, 1] = cy
    E[1, 2] = 0.0
    E[2, 0] = -sp
    E[2, 1] = 0.0
    E[2, 2] = 1.0
    return E


@jit_kernel
def _axis_rot(axis, angle):
    # Rodrigues formula; axis must be unit length.
    c = np.cos(angle)
    s = np.sin(angle)
    v = 1.0 - c
    ax = axis[0]
    ay = axis[1]
    az = axis[2]
    R = np.empty((3, 3))
    R[0, 0] = c + ax * ax * v
    R[0, 1] = ax * ay * v - az * s
    R[0, 2] = ax * az * v + ay * s
    R[1, 0] = ay * ax * v + az * s
    R[1, 1] = c + ay * ay * v
    R[1, 2] = ay * az * v - ax * s
    R[2, 0] = az * ax * v - ay * s
    R[2, 1] = az * ay * v + ax * s
    R[2, 2] = c + az * az * v
    return R


@jit_kernel
def _mat_vec3(R, v):
    out = np.empty(3)
    for i in range(3):
        out[i] = R[i, 0] * v[0] + R[i, 1] * v[1] + R[i, 2] * v[2]
    return out


@jit_kernel
def _cross3(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@jit_kernel
def forward_kinematics(q, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom):
    """Poses of the 5 bodies plus joint anchor points.

    Returns (R (5,3,3), com (5,3), anchors (5,3), axw (4,3)) where anchors
    holds [body com, shoulder L, elbow L, shoulder R, elbow R] and axw the
    world joint axes [shoulder L, elbow L, shoulder R, elbow R].
    """
    p = q[0:3]
    qs = q[6]
    qe = q[7]
    Rb = _rot_zyx(q[3], q[4], q[5])

    R = np.empty((5, 3, 3))
    com = np.empty((5, 3))
    anchors = np.empty((5, 3))
    axw = np.empty((4, 3))

    R[0] = Rb
    for i in range(3):
        com[0, i] = p[i]
        anchors[0, i] = p[i]

    for side in range(2):
        sgn = 1.0 if side == 0 else -1.0
        bp = 1 + 2 * side  # proximal body index
        bd = 2 + 2 * side  # distal body index
        p_sh = p + _mat_vec3(Rb, r_sh[side])
        Rp = Rb @ _axis_rot(ax_s[side], sgn * qs)
        p_el = p_sh + _mat_vec3(Rp, r_el[side])
        Rd = Rp @ _axis_rot(ax_e[side], sgn * qe)
        R[bp] = Rp
        R[bd] = Rd
        com[bp] = p_sh + _mat_vec3(Rp, r_pcom[side])
        com[bd] = p_el + _mat_vec3(Rd, r_dcom[side])
        anchors[1 + 2 * side] = p_sh
        anchors[2 + 2 * side] = p_el
        axw[2 * side] = _mat_vec3(Rb, ax_s[side])
        axw[2 * side + 1] = _mat_vec3(Rp, ax_e[side])

    return R, com, anchors, axw


@jit_kernel
def _point_jacobian(point, body, p, E, anchors, axw):
    """3x8 velocity map of a world-space point attached to body ``body``."""
    J = np.zeros((3, 8))
    rel = point - p
    for i in range(3):
        J[i, i] = 1.0
    for j in range(3):
        Ej = E[:, j]
        c = _cross3(Ej, rel)
        for i in range(3):
            J[i, 3 + j] = c[i]
    if body >= 1:
        side = (body - 1) // 2
        sgn = 1.0 if side == 0 else -1.0
        arm = point - anchors[1 + 2 * side]
        c = _cross3(axw[2 * side], arm)
        for i in range(3):
            J[i, 6] = sgn * c[i]
        if body == 2 or body == 4:
            arm_e = point - anchors[2 + 2 * side]
            ce = _cross3(axw[2 * side + 1], arm_e)
            for i in range(3):
                J[i, 7] = sgn * ce[i]
    return J


@jit_kernel
def body_jacobians(q, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom):
    """COM linear and angular Jacobians of all 5 bodies (world frame)."""
    R, com, anchors, axw = forward_kinematics(
        q, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom
    )
    E = _euler_rate_map(q[3], q[4], q[5])
    p = q[0:3]

    Jv = np.zeros((5, 3, 8))
    Jw = np.zeros((5, 3, 8))
    for b in range(5):
        Jv[b] = _point_jacobian(com[b], b, p, E, anchors, axw)
        for j in range(3):
            for i in range(3):
                Jw[b, i, 3 + j] = E[i, j]
        if b >= 1:
            side = (b - 1) // 2
            sgn = 1.0 if side == 0 else -1.0
            for i in range(3):
                Jw[b, i, 6] = sgn * axw[2 * side, i]
            if b == 2 or b == 4:
                for i in range(3):
                    Jw[b, i, 7] = sgn * axw[2 * side + 1, i]
    return R, com, anchors, axw, E, Jv, Jw


@jit_kernel
def mass_matrix(q, masses, inertias, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom):
    """8x8 generalized inertia: sum over bodies of Jv'mJv + Jw'(RIR')Jw."""
    R, com, anchors, axw, E, Jv, Jw = body_jacobians(
        q, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom
    )
    M = np.zeros((8, 8))
    for b in range(5):
        m = masses[b]
        Rb = R[b]
        # inertia rotated to world axes: Iw = Rb I Rb'
        Iw = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                acc = 0.0
                for k in range(3):
                    for l in range(3):
                        acc += Rb[i, k] * inertias[b, k, l] * Rb[j, l]
                Iw[i, j] = acc
        JvT = Jv[b]
        JwT = Jw[b]
        IJw = Iw @ JwT
        for i in range(8):
            for j in range(i, 8):
                acc = 0.0
                for k in range(3):
                    acc += m * JvT[k, i] * JvT[k, j]
                    acc += JwT[k, i] * IJw[k, j]
                M[i, j] += acc
    for i in range(8):
        for j in range(i):
            M[i, j] = M[j, i]
    return M


@jit_kernel
def gravity_force(q, masses, grav, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom):
    """Generalized gravity force -dV/dq for V = g * sum(m_b * z_b)."""
    R, com, anchors, axw, E, Jv, Jw = body_jacobians(
        q, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom
    )
    out = np.zeros(8)
    for b in range(5):
        for k in range(8):
            out[k] -= grav * masses[b] * Jv[b, 2, k]
    return out


@jit_kernel
def bias_forces(q, qd, masses, inertias, grav, fd_step,
                r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom):
    """Gravity + Coriolis/centrifugal generalized force.

    h = -Mdot qd + 0.5 d(qd' M qd)/dq - dV/dq, with dM/dq_j by central
    differences.  M does not depend on the translation coordinates, so only
    j = 3..7 are differenced.
    """
    h = gravity_force(q, masses, grav, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom)
    moving = False
    for i in range(8):
        if qd[i] != 0.0:
            moving = True
            break
    if not moving:
        return h
    qp = q.copy()
    for j in range(3, 8):
        qp[j] = q[j] + fd_step
        Mp = mass_matrix(qp, masses, inertias, r_sh, ax_s, r_el, ax_e,
                         r_pcom, r_dcom)
        qp[j] = q[j] - fd_step
        Mm = mass_matrix(qp, masses, inertias, r_sh, ax_s, r_el, ax_e,
                         r_pcom, r_dcom)
        qp[j] = q[j]
        # dM = (Mp - Mm) / (2 h); accumulate -qd_j * (dM @ qd) and quadratic term
        dMqd = np.zeros(8)
        quad = 0.0
        for i in range(8):
            acc = 0.0
            for k in range(8):
                dm = (Mp[i, k] - Mm[i, k]) / (2.0 * fd_step)
                acc += dm * qd[k]
            dMqd[i] = acc
            quad += qd[i] * acc
        for i in range(8):
            h[i] -= qd[j] * dMqd[i]
        h[j] += 0.5 * quad
    return h


@jit_kernel
def element_states(q, qd, wind, e_body, e_local,
                   r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom):
    """Kinematic state of every blade element.

    Returns (pos, vel, nvec, cvec, vn, ve, jac):
      pos/vel  world position / velocity of the quarter-chord point
      nvec     upper-surface normal (world)
      cvec     chordwise unit vector toward the leading edge (world)
      vn       (wind - vel) . nvec   [m/s], positive produces positive lift
      ve       -(wind - vel) . cvec  [m/s], edgewise relative flow speed
      jac      3x8 point velocity maps (transpose = force map B)
    """
    R, com, anchors, axw = forward_kinematics(
        q, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom
    )
    E = _euler_rate_map(q[3], q[4], q[5])
    p = q[0:3]
    n = e_body.shape[0]

    pos = np.empty((n, 3))
    vel = np.empty((n, 3))
    nvec = np.empty((n, 3))
    cvec = np.empty((n, 3))
    vn = np.empty(n)
    ve = np.empty(n)
    jac = np.empty((n, 3, 8))

    for idx in range(n):
        b = e_body[idx]
        pt = anchors[b] + _mat_vec3(R[b], e_local[idx])
        J = _point_jacobian(pt, b, p, E, anchors, axw)
        v = np.zeros(3)
        for i in range(3):
            acc = 0.0
            for k in range(8):
                acc += J[i, k] * qd[k]
            v[i] = acc
        nv = np.empty(3)
        cv = np.empty(3)
        for i in range(3):
            nv[i] = R[b][i, 2]
            cv[i] = R[b][i, 0]
        rel = wind - v  # air velocity relative to the element
        vn[idx] = rel[0] * nv[0] + rel[1] * nv[1] + rel[2] * nv[2]
        ve[idx] = -(rel[0] * cv[0] + rel[1] * cv[1] + rel[2] * cv[2])
        pos[idx] = pt
        vel[idx] = v
        nvec[idx] = nv
        cvec[idx] = cv
        jac[idx] = J
    return pos, vel, nvec, cvec, vn, ve, jac


@jit_kernel
def thruster_generalized(q, thr_pos, thr_axis, thrusts,
                         r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom):
    """Map body-mounted thruster scalars into a generalized force (8,)."""
    R, com, anchors, axw = forward_kinematics(
        q, r_sh, ax_s, r_el, ax_e, r_pcom, r_dcom
    )
    E = _euler_rate_map(q[3], q[4], q[5])
    p = q[0:3]
    u = np.zeros(8)
    for t in range(thrusts.shape[0]):
        f = _mat_vec3(R[0], thr_axis[t]) * thrusts[t]
        pt = p + _mat_vec3(R[0], thr_pos[t])
        J = _point_jacobian(pt, 0, p, E, anchors, axw)
        for k in range(8):
            u[k] += J[0, k] * f[0] + J[1, k] * f[1] + J[2, k] * f[2]
    return u


@jit_kernel
def aero_rates(a, z1, z2, vn, U, sinn, sinn_inv, dsin, chord, bhalf,
               a0, c0, span, psi1, psi2, eps1, eps2, phi0):
    """Time derivatives of the spanwise circulation and wake memory states.

    Collocation at every station i equates the Fourier form of the sectional
    lift coefficient with the wake-memory form:

        a0 * sum_n [ (c0/c_i) a_n + (c0/U) adot_n ] sin(n theta_i)
            = (a0/U) (w_i phi0 + z1_i + z2_i)

    with total downwash w = vn + wy and the vortex-induced part

        wy_i = -(a0 c0 U / 4 S) sum_n n a_n sin(n theta_i)/sin(theta_i).

    Returns (adot, z1dot, z2dot, wy, w, cl).
    """
    m = a.shape[0]
    wy = np.empty(m)
    w = np.empty(m)
    cl = np.empty(m)
    rhs = np.empty(m)
    coef = a0 * c0 * U / (4.0 * span)
    for i in range(m):
        s = 0.0
        t = 0.0
        for j in range(m):
            s += dsin[i, j] * a[j]
            t += sinn[i, j] * a[j]
        wy[i] = -coef * s
        w[i] = vn[i] + wy[i]
        cl[i] = (a0 / U) * (w[i] * phi0 + z1[i] + z2[i])
        rhs[i] = cl[i] - a0 * c0 * t / chord[i]
    adot = np.empty(m)
    scale = U / (a0 * c0)
    for i in range(m):
        acc = 0.0
        for j in range(m):
            acc += sinn_inv[i, j] * rhs[j]
        adot[i] = scale * acc
    z1dot = np.empty(m)
    z2dot = np.empty(m)
    for i in range(m):
        k = U / bhalf[i]
        z1dot[i] = psi1 * eps1 * k * w[i] - eps1 * k * z1[i]
        z2dot[i] = psi2 * eps2 * k * w[i] - eps2 * k * z2[i]
    return adot, z1dot, z2dot, wy, w, cl


@jit_kernel
def quasi_steady_cl(vn, ve, a0):
    """Instantaneous baseline: cl = a0 * atan2(vn, ve), no wake memory."""
    m = vn.shape[0]
    cl = np.empty(m)
    for i in range(m):
        cl[i] = a0 * np.arctan2(vn[i], ve[i])
    return cl


@jit_kernel
def aero_forces(cl, wy, vn, ve, nvec, cvec, chord, dy, jac, rho, cd0):
    """Sectional force vectors and the generalized aerodynamic force.

    Lift magnitude 0.5 rho V^2 c dy cl acts perpendicular to the local
    relative flow in the plane spanned by the chordwise and normal vectors;
    the vortex-induced downwash tilts it downstream by wy/V (induced drag)
    and a constant profile-drag coefficient adds a downstream component.
    """
    n = cl.shape[0]
    forces = np.zeros((n, 3))
    u_a = np.zeros(8)
    for i in range(n):
        V2 = vn[i] * vn[i] + ve[i] * ve[i]
        if V2 < 1e-16:
            continue
        V = np.sqrt(V2)
        qS = 0.5 * rho * V2 * chord[i] * dy[i]
        lift = qS * cl[i]
        dprof = qS * cd0
        eps = -wy[i] / V  # downstream tilt angle of the lift vector
        ce = np.cos(eps)
        se = np.sin(eps)
        for k in range(3):
            uhat = (-ve[i] * cvec[i, k] + vn[i] * nvec[i, k]) / V
            lhat = (vn[i] * cvec[i, k] + ve[i] * nvec[i, k]) / V
            f = lift * (ce * lhat + se * uhat) + dprof * uhat
            forces[i, k] = f
        for k in range(8):
            u_a[k] += (jac[i, 0, k] * forces[i, 0]
                       + jac[i, 1, k] * forces[i, 1]
                       + jac[i, 2, k] * forces[i, 2])
    return forces, u_a
