"""SE(3) pose algebra: rotation vectors, composition, error metrics.

Orientations are stored as unit quaternions (w, x, y, z) and renormalized
after every update; rotation matrices are materialized on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Below this quaternion vector norm the rotation-vector extraction switches
# to its small-angle limit to avoid 0/0.
SMALL_ANGLE = 1e-8

# Angles within this distance of pi are flagged: the axis sign is ambiguous
# at pi, so a canonical sign is chosen there.
PI_BAND = 1e-6


def _check_finite(arr, name):
    if type(arr) is np.ndarray and arr.dtype == np.float64:
        a = arr
    else:
        a = np.asarray(arr, dtype=float)
    # summing propagates nan/inf; one scalar check beats np.isfinite on the
    # tiny arrays this guards (this is the constructor hot path)
    if not math.isfinite(float(a.sum())):
        raise ValueError(f"{name} contains non-finite values: {a}")
    return a


# ---------------------------------------------------------------------------
# quaternion helpers (w, x, y, z)
# ---------------------------------------------------------------------------

def quat_identity():
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if n == 0.0:
        raise ValueError("zero quaternion")
    return q / n


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_rotate(q, v):
    """Rotate a 3-vector by a unit quaternion.

    v + 2 w (u x v) + 2 u x (u x v), with the cross products expanded by
    hand: np.cross dominates the harness tick loop otherwise.
    """
    w, x, y, z = q[0], q[1], q[2], q[3]
    vx, vy, vz = v[0], v[1], v[2]
    ux = y * vz - z * vy
    uy = z * vx - x * vz
    uz = x * vy - y * vx
    return np.array([
        vx + 2.0 * (w * ux + y * uz - z * uy),
        vy + 2.0 * (w * uy + z * ux - x * uz),
        vz + 2.0 * (w * uz + x * uy - y * ux),
    ])


def quat_from_rotvec(rv):
    rv = np.asarray(rv, dtype=float)
    angle = np.linalg.norm(rv)
    if angle < SMALL_ANGLE:
        # first-order: sin(a/2)/a ~ 1/2 - a^2/48
        s = 0.5 - angle * angle / 48.0
        return quat_normalize(np.array([1.0 - angle * angle / 8.0,
                                        s * rv[0], s * rv[1], s * rv[2]]))
    axis = rv / angle
    half = 0.5 * angle
    s = np.sin(half)
    return np.array([np.cos(half), s * axis[0], s * axis[1], s * axis[2]])


def quat_to_matrix(q):
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array([
        [1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)],
        [2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)],
        [2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)],
    ])


def quat_from_matrix(R):
    """Shepperd's method; returns a unit quaternion with w >= 0."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] >= R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    if q[0] < 0.0:
        q = -q
    return quat_normalize(q)


# ---------------------------------------------------------------------------
# rotation matrices / rotation vectors
# ---------------------------------------------------------------------------

def rot_x(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])


def rot_y(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0, s], [0, 1.0, 0], [-s, 0, c]])


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def exp_rotvec(rv):
    """Rotation matrix from a rotation vector, via the quaternion exponential."""
    return quat_to_matrix(quat_from_rotvec(rv))


_EYE3 = np.eye(3)
_EYE3.setflags(write=False)


def check_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    err = np.abs(R @ R.T - _EYE3).max()
    if err > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("matrix is not a proper rotation "
                         f"(orthonormality error {err:.3e}, det {np.linalg.det(R):.12f})")
    return R


def rotation_vector_flagged(R_rel):
    """Axis*angle of a relative rotation, angle in [0, pi].

    Goes through the quaternion (Shepperd extraction + atan2 angle), which
    stays well conditioned for angles arbitrarily close to pi. Returns
    (rotvec, near_pi) where near_pi marks the axis-sign ambiguity within
    PI_BAND of pi; there the axis sign is canonicalized so that the first
    nonzero component is positive.
    """
    R = check_rotation(R_rel)
    q = quat_from_matrix(R)           # w >= 0, so angle in [0, pi]
    w = q[0]
    u = q[1:4]
    s = np.linalg.norm(u)
    if s < SMALL_ANGLE:
        # angle/sin(angle/2) -> 2: rv ~ 2 u / w to second order
        return 2.0 * u / w, False
    angle = 2.0 * np.arctan2(s, w)
    axis = u / s
    near_pi = bool(angle > np.pi - PI_BAND)
    if near_pi:
        for c in axis:
            if abs(c) > 1e-12:
                if c < 0.0:
                    axis = -axis
                break
    return axis * angle, near_pi


def rotation_vector(R_rel):
    """Axis*angle rotation vector of R_rel; exp of the result reconstructs it."""
    rv, _ = rotation_vector_flagged(R_rel)
    return rv


def geodesic_angle(Ra, Rb):
    """Angle of the relative rotation between two orientations, radians."""
    return float(np.linalg.norm(rotation_vector(np.asarray(Ra).T @ np.asarray(Rb))))


# ---------------------------------------------------------------------------
# pose / twist / wrench
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pose:
    """Rigid-body pose: position p (m) and orientation quaternion q (w,x,y,z)."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=quat_identity)

    def __post_init__(self):
        object.__setattr__(self, "p", _check_finite(self.p, "position"))
        object.__setattr__(self, "q", quat_normalize(_check_finite(self.q, "quaternion")))

    @property
    def R(self):
        return quat_to_matrix(self.q)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_rt(cls, R, p):
        return cls(p=np.asarray(p, dtype=float), q=quat_from_matrix(check_rotation(R)))

    def transform(self, point):
        return self.p + quat_rotate(self.q, np.asarray(point, dtype=float))

    def copy(self):
        return Pose(p=self.p.copy(), q=self.q.copy())


def compose(a: Pose, b: Pose) -> Pose:
    """Pose product a*b: apply b in a's frame."""
    return Pose(p=a.p + quat_rotate(a.q, b.p), q=quat_mul(a.q, b.q))


def inverse(a: Pose) -> Pose:
    qi = quat_conj(a.q)
    return Pose(p=-quat_rotate(qi, a.p), q=qi)


def relative(a: Pose, b: Pose) -> Pose:
    """a^-1 * b."""
    return compose(inverse(a), b)


def pose_error(a: Pose, b: Pose):
    """(position distance, geodesic angle) between two poses."""
    dp = float(np.linalg.norm(a.p - b.p))
    q_rel = quat_mul(quat_conj(a.q), b.q)
    w = min(1.0, abs(q_rel[0]))
    return dp, 2.0 * float(np.arccos(w))


@dataclass(frozen=True)
class Twist:
    """Spatial velocity: linear v (m/s) and angular w (rad/s)."""

    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    w: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "v", _check_finite(self.v, "linear velocity"))
        object.__setattr__(self, "w", _check_finite(self.w, "angular velocity"))

    @classmethod
    def zero(cls):
        return cls()

    def as_array(self):
        return np.concatenate([self.v, self.w])


@dataclass(frozen=True)
class Wrench:
    """6-D force/torque: f (N) and tau (N*m)."""

    f: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "f", _check_finite(self.f, "force"))
        object.__setattr__(self, "tau", _check_finite(self.tau, "torque"))

    @classmethod
    def zero(cls):
        return cls()

    def as_array(self):
        return np.concatenate([self.f, self.tau])

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(f=a[:3].copy(), tau=a[3:6].copy())
