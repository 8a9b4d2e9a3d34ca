"""Impedance law and Jacobian-transpose tests.

oracle_wrench is an independent straight-line transcription of the
spring-damper law, using the quaternion-log rotation vector from the
geometry test oracle, written before checking against the implementation.
"""

import numpy as np
import pytest

from teleimp.geometry import Pose, Twist, Wrench, exp_rotvec, quat_from_matrix, rot_z
from teleimp.impedance import (
    DEFAULT_ROT_STIFFNESS,
    DEFAULT_TRANS_STIFFNESS,
    ImpedanceGains,
    Joint,
    SerialChain,
    impedance_wrench,
    jacobian,
    joint_torques,
    planar_two_link,
)

from test_geometry import quat_log_rotvec, random_pose, random_rotation


def oracle_rotvec(R):
    """Independent rotation vector: axis from the skew part, angle via
    atan2 (the implementation under test uses arccos of the trace)."""
    vee = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = np.linalg.norm(vee)
    c = 0.5 * (np.trace(R) - 1.0)
    if s < 1e-12:
        return vee
    return vee / s * np.arctan2(s, c)


def oracle_wrench(cur_pose, cur_twist, tgt_pose, tgt_twist, K, D):
    """Direct evaluation: F = K [p_t - p; phi(R^T R_t)] + D [v_t - v; w_t - w]."""
    e = np.zeros(6)
    e[0:3] = tgt_pose.p - cur_pose.p
    e[3:6] = oracle_rotvec(cur_pose.R.T @ tgt_pose.R)
    de = np.zeros(6)
    de[0:3] = tgt_twist.v - cur_twist.v
    de[3:6] = tgt_twist.w - cur_twist.w
    return K @ e + D @ de


def random_twist(rng):
    return Twist(v=rng.normal(size=3), w=rng.normal(size=3))


def random_state_pair(rng):
    """Current/target pose pair whose relative rotation stays below 2 rad:
    keeps the angle extraction well conditioned so oracle and implementation
    agree to machine precision."""
    cur = random_pose(rng)
    rel = random_rotation(rng, max_angle=2.0)
    tgt = Pose(p=rng.normal(size=3), q=quat_from_matrix(cur.R @ rel))
    return cur, tgt


def random_gains(rng):
    k = rng.uniform(0.0, 300.0, size=6)
    # random PSD damping: A A^T
    A = rng.normal(size=(6, 6))
    return ImpedanceGains(K=np.diag(k), D=A @ A.T)


class TestImpedanceWrench:
    def test_zero_error_zero_wrench(self):
        gains = ImpedanceGains.critically_damped()
        pose = Pose(p=np.array([0.1, 0.2, 0.3]))
        twist = Twist(v=np.array([1.0, 0.0, 0.0]))
        w = impedance_wrench(pose, twist, pose, twist, gains)
        assert np.allclose(w.as_array(), 0.0, atol=1e-15)

    def test_paper_translational_example(self):
        # 0.1 m offset at 200 N/m -> 20 N restoring force
        gains = ImpedanceGains.critically_damped()
        cur = Pose(p=np.zeros(3))
        tgt = Pose(p=np.array([0.1, 0.0, 0.0]))
        w = impedance_wrench(cur, Twist.zero(), tgt, Twist.zero(), gains)
        assert np.allclose(w.f, [20.0, 0.0, 0.0], atol=1e-12)
        assert np.allclose(w.tau, 0.0, atol=1e-12)

    def test_matches_oracle_on_random_states(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            gains = random_gains(rng)
            cur_p, tgt_p = random_state_pair(rng)
            cur_t, tgt_t = random_twist(rng), random_twist(rng)
            got = impedance_wrench(cur_p, cur_t, tgt_p, tgt_t, gains).as_array()
            want = oracle_wrench(cur_p, cur_t, tgt_p, tgt_t, gains.K, gains.D)
            assert np.abs(got - want).max() < 1e-12

    def test_homogeneity(self):
        gains = ImpedanceGains.critically_damped()
        cur = Pose(p=np.zeros(3))
        for s in (0.5, 2.0, -3.0):
            tgt = Pose(p=s * np.array([0.02, -0.01, 0.03]))
            tw = Twist(v=s * np.array([0.1, 0.2, -0.1]))
            w = impedance_wrench(cur, Twist.zero(), tgt, tw, gains).as_array()
            w1 = impedance_wrench(cur, Twist.zero(),
                                  Pose(p=np.array([0.02, -0.01, 0.03])),
                                  Twist(v=np.array([0.1, 0.2, -0.1])),
                                  gains).as_array()
            assert np.allclose(w, s * w1, atol=1e-12)

    def test_restoring_direction(self):
        gains = ImpedanceGains.critically_damped()
        rng = np.random.default_rng(29)
        for _ in range(20):
            dp = rng.normal(size=3)
            w = impedance_wrench(Pose(), Twist.zero(), Pose(p=dp), Twist.zero(), gains)
            cos = np.dot(w.f, dp) / (np.linalg.norm(w.f) * np.linalg.norm(dp))
            assert np.isclose(cos, 1.0, atol=1e-12)
            assert np.isclose(np.linalg.norm(w.f),
                              DEFAULT_TRANS_STIFFNESS * np.linalg.norm(dp))

    def test_rejects_non_finite(self):
        gains = ImpedanceGains.critically_damped()
        with pytest.raises(ValueError):
            impedance_wrench(Pose(), Twist(v=np.array([np.nan, 0, 0])),
                             Pose(), Twist.zero(), gains)


class TestGainValidation:
    def test_non_diagonal_stiffness_rejected(self):
        K = np.eye(6)
        K[0, 1] = 1.0
        with pytest.raises(ValueError):
            ImpedanceGains(K=K, D=np.eye(6))

    def test_negative_stiffness_rejected(self):
        with pytest.raises(ValueError):
            ImpedanceGains.from_diagonals([-1.0] + [1.0] * 5, [1.0] * 6)

    def test_asymmetric_damping_rejected(self):
        D = np.eye(6)
        D[0, 1] = 1.0
        with pytest.raises(ValueError):
            ImpedanceGains(K=np.eye(6), D=D)

    def test_indefinite_damping_rejected(self):
        with pytest.raises(ValueError):
            ImpedanceGains(K=np.eye(6), D=-np.eye(6))

    def test_critical_damping_values(self):
        g = ImpedanceGains.critically_damped(k_trans=200.0, mass=1.0, zeta=1.0)
        assert np.isclose(g.D[0, 0], 2.0 * np.sqrt(200.0))
        assert np.isclose(g.D[3, 3],
                          2.0 * np.sqrt(DEFAULT_ROT_STIFFNESS * 0.01))


class TestJacobian:
    def test_planar_two_link_torques(self):
        chain = planar_two_link()
        J = jacobian(chain, np.zeros(2))
        tau = joint_torques(J, Wrench(f=np.array([0.0, 10.0, 0.0])))
        assert np.allclose(tau, [20.0, 10.0], atol=1e-12)

    def test_zero_force_zero_torque(self):
        chain = planar_two_link()
        rng = np.random.default_rng(31)
        tau = joint_torques(jacobian(chain, rng.normal(size=2)), Wrench.zero())
        assert np.allclose(tau, 0.0)

    def test_identity_jacobian(self):
        w = Wrench(f=np.array([1.0, 2.0, 3.0]), tau=np.array([4.0, 5.0, 6.0]))
        assert np.allclose(joint_torques(np.eye(6), w), w.as_array())

    def test_translational_block_matches_finite_differences(self):
        rng = np.random.default_rng(37)
        h = 1e-6
        for _ in range(10):
            n = rng.integers(1, 6)
            joints = []
            for _ in range(n):
                axis = rng.normal(size=3)
                axis /= np.linalg.norm(axis)
                joints.append(Joint(
                    axis=axis,
                    origin=Pose(p=rng.normal(size=3) * 0.3,
                                q=quat_from_matrix(random_rotation(rng)))))
            chain = SerialChain(joints=tuple(joints),
                                tool=Pose(p=rng.normal(size=3) * 0.3))
            q = rng.normal(size=n)
            J = jacobian(chain, q)
            for i in range(n):
                dq = np.zeros(n)
                dq[i] = h
                fd = (chain.forward(q + dq).p - chain.forward(q - dq).p) / (2.0 * h)
                assert np.abs(J[:3, i] - fd).max() < 1e-6

    def test_shape_errors(self):
        chain = planar_two_link()
        with pytest.raises(ValueError):
            jacobian(chain, np.zeros(3))
        with pytest.raises(ValueError):
            joint_torques(np.zeros((5, 2)), Wrench.zero())

    def test_forward_two_link(self):
        chain = planar_two_link()
        assert np.allclose(chain.forward([0.0, 0.0]).p, [2.0, 0.0, 0.0], atol=1e-12)
        tip = chain.forward([np.pi / 2.0, 0.0]).p
        assert np.allclose(tip, [0.0, 2.0, 0.0], atol=1e-12)


def test_passivity_surrogate():
    """Free body driven toward a fixed target with PSD damping: total
    energy (kinetic + spring) is non-increasing step to step."""
    gains = ImpedanceGains.critically_damped()
    mass, inertia = 1.0, 0.01
    dt = 1e-3
    pose = Pose(p=np.array([0.3, -0.2, 0.1]),
                q=quat_from_matrix(rot_z(0.8)))
    v = np.zeros(3)
    w = np.zeros(3)
    target = Pose()

    def energy(pose, v, w):
        e = np.concatenate([target.p - pose.p,
                            quat_log_rotvec(pose.R.T @ target.R)])
        kin = 0.5 * mass * v @ v + 0.5 * inertia * w @ w
        return kin + 0.5 * e @ gains.K @ e

    prev = energy(pose, v, w)
    for _ in range(5000):
        wr = impedance_wrench(pose, Twist(v=v, w=w), target, Twist.zero(), gains)
        v = v + dt * wr.f / mass
        w = w + dt * wr.tau / inertia
        R = exp_rotvec(w * dt) @ pose.R
        pose = Pose(p=pose.p + dt * v, q=quat_from_matrix(R))
        cur = energy(pose, v, w)
        assert cur <= prev + 1e-6
        prev = cur
    assert np.linalg.norm(pose.p - target.p) < 1e-4
