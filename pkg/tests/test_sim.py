"""Rigid-body world tests: integration, contacts, friction, energy.

Static oracles used here:
- resting penetration = m*g/k_n (single-spring equilibrium)
- squeeze normal force = K_t*k_n/(K_t+k_n)*depth (series-spring equilibrium)
"""

import numpy as np
import pytest

from teleimp.geometry import Pose, Twist, compose, quat_from_matrix, rot_y
from teleimp.harness import _grasp_offset, _upright_pose
from teleimp.sim import (
    ContactGeometry,
    ContactParams,
    RigidBody,
    Simulation,
    SimulationFault,
    contact_forces,
    default_world,
    squeeze_hold_check,
    squeeze_normal_force,
    step,
)
from teleimp.sim.world import GRAVITY
from teleimp.tasks import BoxSpec

BOX = BoxSpec()
REST_PEN = BOX.mass * GRAVITY / 10_000.0   # m*g/k_n


def make_sim(**kw):
    return Simulation(default_world(**kw))


def squeeze(sim, depth, box_pose=None, twist_z=0.0):
    """Point both effector targets at a symmetric squeeze of the box."""
    desired = box_pose or _upright_pose([0.0, 0.0, BOX.resting_height], 0.0)
    for side in range(2):
        g = _grasp_offset(side, BOX.dims[0] / 2.0, depth)
        sim.set_target(side, compose(desired, g), Twist(v=np.array([0, 0, twist_z])))


class TestIntegration:
    def test_free_fall(self):
        sim = make_sim()
        sim.set_box_pose(Pose(p=np.array([0.0, 0.0, 50.0])))
        t = 1.0
        n = int(round(t / sim.dt))
        sim.step(n)
        assert abs(sim.box_s[9] + GRAVITY * t) <= 1e-9 * t

    def test_effectors_feel_no_gravity(self):
        sim = make_sim()
        sim.step(1000)
        for side in range(2):
            assert np.allclose(sim.effector_twist(side).v, 0.0, atol=1e-9)

    def test_resting_penetration(self):
        sim = make_sim()
        sim.step(10_000)   # 10 s
        z = sim.box_s[2]
        pen = BOX.resting_height - z
        assert abs(pen - REST_PEN) < 0.05 * REST_PEN
        assert np.linalg.norm(sim.box_s[0:2]) < 1e-4

    def test_resting_stability_over_10s(self):
        sim = make_sim()
        sim.step(2_000)    # settle
        p0 = sim.box_pose().p.copy()
        for _ in range(20):
            sim.step(500)
            assert np.linalg.norm(sim.box_pose().p - p0) < 1e-4

    def test_determinism_bitwise(self):
        states = []
        for _ in range(2):
            sim = make_sim()
            squeeze(sim, 0.03)
            sim.step(500)
            states.append((sim.box_s.copy(), sim.eff_s.copy()))
        assert np.array_equal(states[0][0], states[1][0])
        assert np.array_equal(states[0][1], states[1][1])

    def test_functional_step_pure(self):
        world = default_world()
        (w1, _), (w2, _) = step(world), step(world)
        assert np.array_equal(w1.box.pose.p, w2.box.pose.p)
        assert np.array_equal(w1.box.pose.q, w2.box.pose.q)

    def test_non_finite_state_faults(self):
        sim = make_sim()
        sim.box_s[0] = np.nan
        with pytest.raises(SimulationFault):
            sim.step()


class TestSqueezeEquilibrium:
    def test_series_spring_normal_force(self):
        """Targets 0.05 m behind the faces -> ~9.80 N per face at steady state."""
        sim = make_sim()
        squeeze(sim, 0.05)
        sim.step(3_000)
        want = squeeze_normal_force(default_world(), 0.05)   # 9.8039 N
        assert np.isclose(want, 200.0 * 10_000.0 / 10_200.0 * 0.05)
        for pair in (0, 1):   # effector-box pairs
            fn = abs(sim.diag.pair_force[pair, 1, 0])   # x-normal on the box
            assert abs(fn - want) < 0.05 * want

    def test_hold_check_oracle(self):
        world = default_world()
        mg = BOX.mass * GRAVITY
        assert squeeze_hold_check(world, 0.05)
        assert not squeeze_hold_check(world, 0.015)
        assert not squeeze_hold_check(world, 0.0)
        assert 2.0 * 0.8 * squeeze_normal_force(world, 0.05) >= mg
        assert 2.0 * 0.8 * squeeze_normal_force(world, 0.015) < mg

    def test_deep_squeeze_lifts_box(self):
        """With a holding squeeze, raising the targets raises the box."""
        sim = make_sim()
        squeeze(sim, 0.05)
        sim.step(2_000)
        lifted = _upright_pose([0.0, 0.0, BOX.resting_height + 0.15], 0.0)
        squeeze(sim, 0.05, box_pose=lifted)
        sim.step(4_000)
        # gravity sags the grasp a little below the commanded +0.15 m
        assert sim.box_pose().p[2] > BOX.resting_height + 0.08

    def test_shallow_squeeze_slips(self):
        sim = make_sim()
        squeeze(sim, 0.015)
        sim.step(2_000)
        lifted = _upright_pose([0.0, 0.0, BOX.resting_height + 0.15], 0.0)
        squeeze(sim, 0.015, box_pose=lifted)
        sim.step(4_000)
        assert sim.box_pose().p[2] < BOX.resting_height + 0.05


class TestContactLaws:
    def test_newtons_third_law(self):
        sim = make_sim()
        squeeze(sim, 0.05)
        for _ in range(200):
            sim.step(10)
            for pair in range(5):
                assert np.abs(sim.diag.pair_force[pair].sum(axis=0)).max() < 1e-12
                assert np.abs(sim.diag.pair_torque[pair].sum(axis=0)).max() < 1e-9

    def test_friction_cone_box_table(self):
        """Sliding box: table tangential force stays inside the cone."""
        sim = make_sim()
        sim.set_box_pose(sim.box_pose(), Twist(v=np.array([0.3, 0.1, 0.0])))
        mu = sim.contacts.mu
        for _ in range(500):
            sim.step()
            f = sim.diag.pair_force[2, 0]    # on the box, from the table
            assert np.hypot(f[0], f[1]) <= mu * abs(f[2]) + 1e-9

    def test_sliding_box_decelerates(self):
        sim = make_sim()
        sim.set_box_pose(sim.box_pose(), Twist(v=np.array([0.3, 0.0, 0.0])))
        sim.step(2_000)
        assert np.linalg.norm(sim.box_twist().v) < 0.01


class TestContactForces:
    def flat_disk_body(self, z, vel=(0.0, 0.0, 0.0)):
        """Disk with its face parallel to the table (face normal +z)."""
        return RigidBody(pose=Pose(p=np.array([0.0, 0.0, z])),
                         twist=Twist(v=np.array(vel)))

    def test_separated_zero(self):
        geo = ContactGeometry("disk", "halfspace")
        wa, wb = contact_forces(self.flat_disk_body(0.5), None, geo)
        assert np.allclose(wa.as_array(), 0.0)
        assert np.allclose(wb.as_array(), 0.0)

    def test_static_penetration_1mm(self):
        geo = ContactGeometry("disk", "halfspace")
        wa, wb = contact_forces(self.flat_disk_body(-0.001), None, geo)
        assert np.allclose(wa.f, [0.0, 0.0, 10.0], atol=1e-9)
        assert np.allclose(wa.f + wb.f, 0.0, atol=1e-12)

    def test_sliding_coulomb_8n(self):
        geo = ContactGeometry("disk", "halfspace")
        wa, _ = contact_forces(self.flat_disk_body(-0.001, vel=(0.01, 0.0, 0.0)),
                               None, geo)
        assert np.isclose(wa.f[2], 10.0, atol=1e-9)
        assert np.isclose(wa.f[0], -8.0, atol=1e-9)   # opposes slip
        assert np.isclose(wa.f[1], 0.0, atol=1e-12)

    def test_stick_regularization_below_eps(self):
        geo = ContactGeometry("disk", "halfspace")
        params = ContactParams()
        wa, _ = contact_forces(
            self.flat_disk_body(-0.001, vel=(params.slip_eps / 2.0, 0.0, 0.0)),
            None, geo, params)
        assert abs(wa.f[0]) < 0.8 * 10.0    # inside the cone, ramped

    def test_cuboid_on_halfspace(self):
        geo = ContactGeometry("cuboid", "halfspace",
                              half_dims=np.array([0.08, 0.08, 0.10]))
        body = RigidBody(pose=Pose(p=np.array([0.0, 0.0, 0.10 - 0.001])))
        wa, _ = contact_forces(body, None, geo)
        assert np.allclose(wa.f, [0.0, 0.0, 10.0], atol=1e-9)
        assert np.allclose(wa.tau, 0.0, atol=1e-12)

    def test_disk_vs_cuboid_face(self):
        box = RigidBody(pose=Pose(p=np.zeros(3)), mass=BOX.mass,
                        inertia=BOX.inertia)
        # disk face normal rotated onto -x, center 1 mm inside the +x face
        disk = RigidBody(pose=Pose(
            p=np.array([0.08 - 0.001, 0.0, 0.0]),
            q=quat_from_matrix(rot_y(-np.pi / 2.0))))
        geo = ContactGeometry("disk", "cuboid",
                              half_dims=np.array([0.08, 0.08, 0.10]))
        wa, wb = contact_forces(disk, box, geo)
        assert np.isclose(wa.f[0], 10.0, atol=1e-9)   # pushed out along +x
        assert np.allclose(wa.f + wb.f, 0.0, atol=1e-12)

    def test_unsupported_pair(self):
        with pytest.raises(ValueError):
            contact_forces(self.flat_disk_body(0.0), None,
                           ContactGeometry("disk", "disk"))


def test_energy_non_increasing_without_contact():
    """Free effector with a fixed offset target: kinetic + spring energy
    decreases monotonically (within 1e-6 J/step) and the effector converges."""
    sim = make_sim()
    # offset small enough that the spring force stays below the saturation
    target = Pose(p=np.array([-0.45, 0.05, 0.3]),
                  q=quat_from_matrix(rot_y(np.pi / 2.0)))
    sim.set_target(0, target, Twist.zero())

    K = np.diag(sim.k_diag[0])
    mass, inertia = sim.eff_mass, sim.eff_inertia

    def energy():
        pose = sim.effector_pose(0)
        tw = sim.effector_twist(0)
        from teleimp.geometry import rotation_vector
        e = np.concatenate([target.p - pose.p,
                            rotation_vector(pose.R.T @ target.R)])
        kin = 0.5 * mass * tw.v @ tw.v + 0.5 * float(tw.w @ (inertia * tw.w))
        return kin + 0.5 * e @ K @ e

    prev = energy()
    for _ in range(10_000):
        sim.step()
        cur = energy()
        assert cur <= prev + 1e-6
        prev = cur
    assert np.linalg.norm(sim.effector_pose(0).p - target.p) < 1e-4
