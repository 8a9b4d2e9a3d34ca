"""Hot numeric kernels for the fixed-step rigid-body world.

Everything here operates on flat float64 arrays so the whole step can be
compiled with numba. Set TELEIMP_NUMBA=0 to run the identical pure-numpy
code paths instead (see benchmarks/bench_step.py for the comparison).

State vector layout per body (13,): position (3), orientation quaternion
w,x,y,z (4), linear velocity (3), angular velocity in the world frame (3).
Targets use the same layout with the target twist in the velocity slots.

Contact pairs are indexed 0: effector0-box, 1: effector1-box, 2: box-table,
3: effector0-table, 4: effector1-table. Per-point penalty stiffness and
damping are the pair totals divided by the number of currently penetrating
sample points, so a flat resting contact reproduces the single-spring
equilibrium penetration m*g/k_n.
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("TELEIMP_NUMBA", "1").lower() not in ("0", "false", "no")

if USE_NUMBA:
    try:
        from numba import njit as _njit

        def jit(f):
            return _njit(cache=True, fastmath=False)(f)
    except ImportError:   # pragma: no cover - numba is a hard dep, but stay usable
        USE_NUMBA = False

if not USE_NUMBA:
    def jit(f):
        return f

# state slots
P0, P1 = 0, 3
Q0, Q1 = 3, 7
V0, V1 = 7, 10
W0, W1 = 10, 13

N_PAIRS = 5
PAIR_EFF0_BOX, PAIR_EFF1_BOX, PAIR_BOX_TABLE, PAIR_EFF0_TABLE, PAIR_EFF1_TABLE = range(5)


@jit
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@jit
def _qconj(q):
    out = np.empty(4)
    out[0] = q[0]
    out[1] = -q[1]
    out[2] = -q[2]
    out[3] = -q[3]
    return out


@jit
def _qmul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@jit
def _qrot(q, v):
    u = q[1:4]
    uv = _cross(u, v)
    t = _cross(u, uv)
    out = np.empty(3)
    for i in range(3):
        out[i] = v[i] + 2.0 * (q[0] * uv[i] + t[i])
    return out


@jit
def _quat_from_rotvec(rv):
    angle = np.sqrt(rv[0] * rv[0] + rv[1] * rv[1] + rv[2] * rv[2])
    out = np.empty(4)
    if angle < 1e-8:
        s = 0.5 - angle * angle / 48.0
        out[0] = 1.0 - angle * angle / 8.0
    else:
        s = np.sin(0.5 * angle) / angle
        out[0] = np.cos(0.5 * angle)
    out[1] = s * rv[0]
    out[2] = s * rv[1]
    out[3] = s * rv[2]
    n = np.sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2] + out[3] * out[3])
    for i in range(4):
        out[i] /= n
    return out


@jit
def _rotvec_from_quat(q):
    w = q[0]
    sign = 1.0
    if w < 0.0:
        sign = -1.0
        w = -w
    s = np.sqrt(q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    out = np.empty(3)
    if s < 1e-9:
        k = sign * 2.0 / w
    else:
        k = sign * 2.0 * np.arctan2(s, w) / s
    out[0] = k * q[1]
    out[1] = k * q[2]
    out[2] = k * q[3]
    return out


@jit
def impedance_kernel(s, t, k_diag, damping, sat, out6):
    """Spring-damper wrench on a floating effector, world frame.

    The rotational stiffness torque is evaluated on the body-frame rotation
    vector error and rotated into the world frame; damping acts on the
    world-frame twist error. Only the diagonal 3x3 blocks of the damping
    matrix are used. Every component is clamped to +-sat.
    """
    q = s[Q0:Q1]
    dp = np.empty(3)
    dv = np.empty(3)
    dw = np.empty(3)
    for i in range(3):
        dp[i] = t[P0 + i] - s[P0 + i]
        dv[i] = t[V0 + i] - s[V0 + i]
        dw[i] = t[W0 + i] - s[W0 + i]
    q_rel = _qmul(_qconj(q), t[Q0:Q1])
    phi_b = _rotvec_from_quat(q_rel)
    tau_b = np.empty(3)
    for i in range(3):
        tau_b[i] = k_diag[3 + i] * phi_b[i]
    tau_w = _qrot(q, tau_b)
    for i in range(3):
        f = k_diag[i] * dp[i]
        for j in range(3):
            f += damping[i, j] * dv[j]
        if f > sat:
            f = sat
        elif f < -sat:
            f = -sat
        out6[i] = f
    for i in range(3):
        tq = tau_w[i]
        for j in range(3):
            tq += damping[3 + i, 3 + j] * dw[j]
        if tq > sat:
            tq = sat
        elif tq < -sat:
            tq = -sat
        out6[3 + i] = tq


@jit
def _point_friction(fn, vt, eps):
    """Regularized Coulomb friction force opposing the tangential slip vt;
    magnitude ramps linearly below the slip epsilon, capped at mu*fn
    (mu is folded into fn by the caller)."""
    out = np.zeros(3)
    vtn = np.sqrt(vt[0] * vt[0] + vt[1] * vt[1] + vt[2] * vt[2])
    if vtn > 1e-12 and fn > 0.0:
        scale = vtn / eps
        if scale > 1.0:
            scale = 1.0
        mag = fn * scale
        for i in range(3):
            out[i] = -mag * vt[i] / vtn
    return out


@jit
def points_vs_halfspace(s, pts_local, table_h, kn, dn, mu, eps,
                        out_f, out_tau, pair_f, pair_tau):
    """Penalty contact of body sample points against the z=table_h half-space.

    Accumulates force/torque (about the body COM) into out_f/out_tau and
    the pair wrench sums about the world origin into pair_f/pair_tau
    (row 0: this body, row 1: the table)."""
    n = pts_local.shape[0]
    p = s[P0:P1]
    q = s[Q0:Q1]
    v = s[V0:V1]
    w = s[W0:W1]
    pen = np.zeros(n)
    pts_w = np.zeros((n, 3))
    active = 0
    for i in range(n):
        pw = p + _qrot(q, pts_local[i])
        pts_w[i] = pw
        d = table_h - pw[2]
        if d > 0.0:
            pen[i] = d
            active += 1
    if active == 0:
        return
    kpt = kn / active
    dpt = dn / active
    for i in range(n):
        if pen[i] <= 0.0:
            continue
        r = pts_w[i] - p
        vpt = v + _cross(w, r)
        fn = kpt * pen[i] - dpt * vpt[2]
        if fn < 0.0:
            fn = 0.0
        vt = np.empty(3)
        vt[0] = vpt[0]
        vt[1] = vpt[1]
        vt[2] = 0.0
        ft = _point_friction(mu * fn, vt, eps)
        F = np.empty(3)
        F[0] = ft[0]
        F[1] = ft[1]
        F[2] = fn + ft[2]
        tq = _cross(r, F)
        tw = _cross(pts_w[i], F)
        for k in range(3):
            out_f[k] += F[k]
            out_tau[k] += tq[k]
            pair_f[0, k] += F[k]
            pair_tau[0, k] += tw[k]
            pair_f[1, k] -= F[k]
            pair_tau[1, k] -= tw[k]


@jit
def points_vs_cuboid(sa, pts_local, sb, half, kn, dn, mu, eps,
                     out_fa, out_ta, out_fb, out_tb, pair_f, pair_tau):
    """Penalty contact of body-A sample points against body-B's cuboid.

    The contact normal is the outward normal of the nearest cuboid face.
    pair rows: 0 = body A, 1 = body B."""
    n = pts_local.shape[0]
    pa = sa[P0:P1]
    qa = sa[Q0:Q1]
    va = sa[V0:V1]
    wa = sa[W0:W1]
    pb = sb[P0:P1]
    qb = sb[Q0:Q1]
    vb = sb[V0:V1]
    wb = sb[W0:W1]
    qb_inv = _qconj(qb)
    pen = np.zeros(n)
    axis = np.zeros(n, dtype=np.int64)
    sign = np.zeros(n)
    pts_w = np.zeros((n, 3))
    active = 0
    for i in range(n):
        pw = pa + _qrot(qa, pts_local[i])
        pts_w[i] = pw
        lb = _qrot(qb_inv, pw - pb)
        inside = True
        best = 1e30
        best_k = 0
        for k in range(3):
            d = half[k] - abs(lb[k])
            if d <= 0.0:
                inside = False
                break
            if d < best:
                best = d
                best_k = k
        if inside:
            pen[i] = best
            axis[i] = best_k
            sign[i] = 1.0 if lb[best_k] >= 0.0 else -1.0
            active += 1
    if active == 0:
        return
    kpt = kn / active
    dpt = dn / active
    for i in range(n):
        if pen[i] <= 0.0:
            continue
        nl = np.zeros(3)
        nl[axis[i]] = sign[i]
        nw = _qrot(qb, nl)           # outward from the cuboid
        pw = pts_w[i]
        ra = pw - pa
        rb = pw - pb
        vpa = va + _cross(wa, ra)
        vpb = vb + _cross(wb, rb)
        rel = vpa - vpb
        sep = rel[0] * nw[0] + rel[1] * nw[1] + rel[2] * nw[2]
        fn = kpt * pen[i] - dpt * sep
        if fn < 0.0:
            fn = 0.0
        vt = np.empty(3)
        for k in range(3):
            vt[k] = rel[k] - sep * nw[k]
        ft = _point_friction(mu * fn, vt, eps)
        F = np.empty(3)
        for k in range(3):
            F[k] = fn * nw[k] + ft[k]
        ta = _cross(ra, F)
        tb = _cross(rb, F)
        tw = _cross(pw, F)
        for k in range(3):
            out_fa[k] += F[k]
            out_ta[k] += ta[k]
            out_fb[k] -= F[k]
            out_tb[k] -= tb[k]
            pair_f[0, k] += F[k]
            pair_tau[0, k] += tw[k]
            pair_f[1, k] -= F[k]
            pair_tau[1, k] -= tw[k]


@jit
def integrate_body(s, force, torque, mass, inertia, dt):
    """Semi-implicit Euler: velocities first, then pose; body-frame Euler
    equations for rotation; quaternion renormalized."""
    q = s[Q0:Q1]
    for i in range(3):
        s[V0 + i] += dt * force[i] / mass
    w_b = _qrot(_qconj(q), s[W0:W1])
    tau_b = _qrot(_qconj(q), torque)
    dw_b = np.empty(3)
    iw = np.empty(3)
    for i in range(3):
        iw[i] = inertia[i] * w_b[i]
    gyro = _cross(w_b, iw)
    for i in range(3):
        dw_b[i] = (tau_b[i] - gyro[i]) / inertia[i]
        w_b[i] += dt * dw_b[i]
    w_w = _qrot(q, w_b)
    for i in range(3):
        s[W0 + i] = w_w[i]
        s[P0 + i] += dt * s[V0 + i]
    rv = np.empty(3)
    for i in range(3):
        rv[i] = dt * w_w[i]
    q_new = _qmul(_quat_from_rotvec(rv), q)
    n = np.sqrt(q_new[0] ** 2 + q_new[1] ** 2 + q_new[2] ** 2 + q_new[3] ** 2)
    for i in range(4):
        s[Q0 + i] = q_new[i] / n


@jit
def step_kernel(box_s, eff_s, eff_t, box_mass, box_inertia, box_corners,
                box_half, eff_mass, eff_inertia, disk_pts,
                k_diag, damping, sat, kn, dn, mu, eps, table_h, grav, dt,
                eff_wrench, pair_f, pair_tau):
    """Advance the whole world by one fixed step of dt.

    Mutates box_s and eff_s in place; fills eff_wrench (2, 6) with the
    applied impedance wrenches and pair_f/pair_tau (5, 2, 3) with per-pair
    contact force/torque sums about the world origin."""
    eff_wrench[:] = 0.0
    pair_f[:] = 0.0
    pair_tau[:] = 0.0
    box_f = np.zeros(3)
    box_t = np.zeros(3)
    box_f[2] -= box_mass * grav
    eff_f = np.zeros((2, 3))
    eff_tq = np.zeros((2, 3))
    for e in range(2):
        impedance_kernel(eff_s[e], eff_t[e], k_diag[e], damping[e], sat, eff_wrench[e])
        for k in range(3):
            eff_f[e, k] += eff_wrench[e, k]
            eff_tq[e, k] += eff_wrench[e, 3 + k]
        points_vs_cuboid(eff_s[e], disk_pts, box_s, box_half, kn, dn, mu, eps,
                         eff_f[e], eff_tq[e], box_f, box_t,
                         pair_f[e], pair_tau[e])
        points_vs_halfspace(eff_s[e], disk_pts, table_h, kn, dn, mu, eps,
                            eff_f[e], eff_tq[e],
                            pair_f[3 + e], pair_tau[3 + e])
    points_vs_halfspace(box_s, box_corners, table_h, kn, dn, mu, eps,
                        box_f, box_t, pair_f[2], pair_tau[2])
    integrate_body(box_s, box_f, box_t, box_mass, box_inertia, dt)
    for e in range(2):
        integrate_body(eff_s[e], eff_f[e], eff_tq[e], eff_mass, eff_inertia, dt)


def disk_points(radius, n_rim=8):
    """Sample points on the effector face: center plus the rim, in the body
    frame (face normal = body +z)."""
    pts = np.zeros((n_rim + 1, 3))
    for i in range(n_rim):
        a = 2.0 * np.pi * i / n_rim
        pts[i + 1, 0] = radius * np.cos(a)
        pts[i + 1, 1] = radius * np.sin(a)
    return pts


def cuboid_corners(half):
    pts = np.zeros((8, 3))
    i = 0
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                pts[i] = (sx * half[0], sy * half[1], sz * half[2])
                i += 1
    return pts
