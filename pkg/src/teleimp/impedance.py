"""Cartesian impedance law and the Jacobian-transpose torque map.

The wrench is a virtual spring-damper between the current and target
end-effector poses:

    F = K [p_t - p; phi(R^T R_t)] + D [v_t - v; w_t - w]

with K a diagonal 6x6 stiffness and D a symmetric PSD damping matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Pose,
    Twist,
    Wrench,
    compose,
    quat_rotate,
    rotation_vector,
)

# Paper-reported translational stiffness for the teleoperation setup.
DEFAULT_TRANS_STIFFNESS = 200.0   # N/m
DEFAULT_ROT_STIFFNESS = 10.0      # N*m/rad


@dataclass(frozen=True)
class ImpedanceGains:
    """Stiffness K (diagonal) and damping D (symmetric PSD), both 6x6."""

    K: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        D = np.asarray(self.D, dtype=float)
        if K.shape != (6, 6) or D.shape != (6, 6):
            raise ValueError("gain matrices must be 6x6")
        if np.any(K - np.diag(np.diag(K)) != 0.0):
            raise ValueError("stiffness matrix must be diagonal")
        if np.any(np.diag(K) < 0.0):
            raise ValueError("stiffness entries must be nonnegative")
        if not np.allclose(D, D.T, atol=1e-12):
            raise ValueError("damping matrix must be symmetric")
        eigs = np.linalg.eigvalsh(0.5 * (D + D.T))
        if eigs.min() < -1e-9:
            raise ValueError(f"damping matrix must be PSD (min eig {eigs.min():.3e})")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "D", D)

    @classmethod
    def from_diagonals(cls, k_diag, d_diag):
        return cls(K=np.diag(np.asarray(k_diag, dtype=float)),
                   D=np.diag(np.asarray(d_diag, dtype=float)))

    @classmethod
    def critically_damped(cls, k_trans=DEFAULT_TRANS_STIFFNESS,
                          k_rot=DEFAULT_ROT_STIFFNESS,
                          mass=1.0, inertia=0.01, zeta=1.0):
        """Per-axis damping d = 2*zeta*sqrt(k*m) against a virtual mass/inertia."""
        k = np.array([k_trans] * 3 + [k_rot] * 3)
        m = np.array([mass] * 3 + [inertia] * 3)
        return cls.from_diagonals(k, 2.0 * zeta * np.sqrt(k * m))

    @property
    def k_trans(self):
        return float(self.K[0, 0])


def impedance_wrench(current_pose: Pose, current_twist: Twist,
                     target_pose: Pose, target_twist: Twist,
                     gains: ImpedanceGains) -> Wrench:
    """Spring-damper wrench pulling the current pose toward the target.

    The orientation error is the rotation vector of the relative rotation
    from current to target, expressed in the current end-effector frame.
    """
    err = np.concatenate([
        target_pose.p - current_pose.p,
        rotation_vector(current_pose.R.T @ target_pose.R),
    ])
    derr = target_twist.as_array() - current_twist.as_array()
    return Wrench.from_array(gains.K @ err + gains.D @ derr)


# ---------------------------------------------------------------------------
# serial chain: forward kinematics, Jacobian, torque map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Joint:
    """Revolute joint: rotation axis in the joint frame plus the fixed
    transform from the parent frame to this joint frame."""

    axis: np.ndarray
    origin: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(a)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"joint axis must be unit norm, got |a| = {n}")
        object.__setattr__(self, "axis", a)


@dataclass(frozen=True)
class SerialChain:
    """Open chain of revolute joints with a fixed tool transform."""

    joints: tuple
    tool: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if len(self.joints) < 1:
            raise ValueError("chain needs at least one joint")
        object.__setattr__(self, "joints", tuple(self.joints))

    @property
    def n(self):
        return len(self.joints)

    def _check_q(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n,):
            raise ValueError(f"expected {self.n} joint angles, got shape {q.shape}")
        return q

    def forward(self, q) -> Pose:
        """Tool pose in the base frame."""
        q = self._check_q(q)
        T = Pose.identity()
        for joint, qi in zip(self.joints, q):
            T = compose(T, joint.origin)
            T = compose(T, Pose.from_rt(_axis_angle_matrix(joint.axis, qi), np.zeros(3)))
        return compose(T, self.tool)

    def joint_frames(self, q):
        """World pose of every joint frame (after its fixed origin transform)."""
        q = self._check_q(q)
        frames = []
        T = Pose.identity()
        for joint, qi in zip(self.joints, q):
            T = compose(T, joint.origin)
            frames.append(T)
            T = compose(T, Pose.from_rt(_axis_angle_matrix(joint.axis, qi), np.zeros(3)))
        return frames


def _axis_angle_matrix(axis, angle):
    from .geometry import exp_rotvec
    return exp_rotvec(np.asarray(axis, dtype=float) * angle)


def jacobian(chain: SerialChain, q) -> np.ndarray:
    """Geometric end-effector Jacobian, 6xn: linear rows first, angular last."""
    q = chain._check_q(q)
    tip = chain.forward(q).p
    J = np.zeros((6, chain.n))
    T = Pose.identity()
    for i, (joint, qi) in enumerate(zip(chain.joints, q)):
        T = compose(T, joint.origin)
        z = quat_rotate(T.q, joint.axis)
        J[:3, i] = np.cross(z, tip - T.p)
        J[3:, i] = z
        T = compose(T, Pose.from_rt(_axis_angle_matrix(joint.axis, qi), np.zeros(3)))
    return J


def joint_torques(J: np.ndarray, wrench: Wrench) -> np.ndarray:
    """tau = J^T F."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != 6:
        raise ValueError(f"Jacobian must be 6xn, got {J.shape}")
    return J.T @ wrench.as_array()


def planar_two_link(l1=1.0, l2=1.0) -> SerialChain:
    """Planar 2R chain in the xy plane, both joints about +z."""
    z = np.array([0.0, 0.0, 1.0])
    return SerialChain(
        joints=(
            Joint(axis=z),
            Joint(axis=z, origin=Pose(p=np.array([l1, 0.0, 0.0]))),
        ),
        tool=Pose(p=np.array([l2, 0.0, 0.0])),
    )
