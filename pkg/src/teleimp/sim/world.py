"""Fixed-step rigid-body world: box, table, two wrench-driven effectors.

The world owns a box on a table plus two floating-body effectors driven by
impedance wrenches toward their clutch-supplied targets. Contacts are
penalty springs with regularized Coulomb friction. Stepping is
deterministic: identical input state yields bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import Pose, Twist, Wrench, quat_from_matrix, rot_y
from ..impedance import ImpedanceGains
from ..tasks import BoxSpec
from . import kernels

DEFAULT_DT = 1e-3
GRAVITY = 9.81

# silicone-pad contact defaults; declared assumptions, configurable per scenario
DEFAULT_K_N = 10_000.0    # N/m
DEFAULT_D_N = 50.0        # N*s/m
DEFAULT_MU = 0.8
DEFAULT_SLIP_EPS = 1e-3   # m/s, stick regularization band

EFFECTOR_MASS = 1.0       # kg, virtual
EFFECTOR_INERTIA = 0.01   # kg*m^2, isotropic
EFFECTOR_FACE_RADIUS = 0.05
WRENCH_SATURATION = 50.0  # per-axis clamp on the applied effector wrench

BASE_SPACING = 0.90       # effector home positions straddle the workspace


class SimulationFault(RuntimeError):
    """Raised when the state goes non-finite; carries a diagnostic snapshot."""

    def __init__(self, message, snapshot):
        super().__init__(f"{message}\n{snapshot}")
        self.snapshot = snapshot


@dataclass(frozen=True)
class RigidBody:
    pose: Pose
    twist: Twist = field(default_factory=Twist.zero)
    mass: float = 1.0
    inertia: np.ndarray = field(default_factory=lambda: np.full(3, 0.01))

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        if self.mass <= 0 or np.any(inertia <= 0):
            raise ValueError("mass and inertia components must be positive")
        object.__setattr__(self, "inertia", inertia)


@dataclass(frozen=True)
class Effector:
    body: RigidBody
    face_radius: float = EFFECTOR_FACE_RADIUS
    target_pose: Pose = field(default_factory=Pose.identity)
    target_twist: Twist = field(default_factory=Twist.zero)
    gains: ImpedanceGains = field(
        default_factory=lambda: ImpedanceGains.critically_damped(
            mass=EFFECTOR_MASS, inertia=EFFECTOR_INERTIA))

    def __post_init__(self):
        if self.face_radius <= 0:
            raise ValueError("face radius must be positive")


@dataclass(frozen=True)
class ContactParams:
    k_n: float = DEFAULT_K_N
    d_n: float = DEFAULT_D_N
    mu: float = DEFAULT_MU
    slip_eps: float = DEFAULT_SLIP_EPS

    def __post_init__(self):
        if self.k_n <= 0 or self.d_n < 0 or self.mu < 0 or self.slip_eps <= 0:
            raise ValueError("invalid contact parameters")


@dataclass(frozen=True)
class WorldState:
    box: RigidBody
    effectors: tuple
    table_height: float = 0.0
    contacts: ContactParams = field(default_factory=ContactParams)
    gravity: float = GRAVITY
    clock: float = 0.0
    dt: float = DEFAULT_DT
    box_dims: tuple | None = None   # cuboid extents; inferred from inertia if None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if len(self.effectors) != 2:
            raise ValueError("world needs exactly two effectors")
        object.__setattr__(self, "effectors", tuple(self.effectors))


def effector_home_pose(side, table_height=0.0, box: BoxSpec | None = None):
    """Home pose for the left (0) / right (1) effector: bases straddle the
    workspace at the standard spacing, disk normals facing inward and the
    mount turned 90 degrees so the face is vertical."""
    box = box or BoxSpec()
    x = -BASE_SPACING / 2.0 if side == 0 else BASE_SPACING / 2.0
    z = table_height + box.resting_height
    R = rot_y(np.pi / 2.0) if side == 0 else rot_y(-np.pi / 2.0)
    return Pose(p=np.array([x, 0.0, z]), q=quat_from_matrix(R))


def default_world(box: BoxSpec | None = None, table_height=0.0,
                  contacts: ContactParams | None = None, dt=DEFAULT_DT,
                  gains: ImpedanceGains | None = None) -> WorldState:
    """Box resting at the workspace center, effectors at their home poses
    with targets on their current poses."""
    box = box or BoxSpec()
    contacts = contacts or ContactParams()
    gains = gains or ImpedanceGains.critically_damped(
        mass=EFFECTOR_MASS, inertia=EFFECTOR_INERTIA)
    box_body = RigidBody(
        pose=Pose(p=np.array([0.0, 0.0, table_height + box.resting_height])),
        mass=box.mass, inertia=box.inertia)
    effectors = []
    for side in range(2):
        home = effector_home_pose(side, table_height, box)
        effectors.append(Effector(
            body=RigidBody(pose=home, mass=EFFECTOR_MASS,
                           inertia=np.full(3, EFFECTOR_INERTIA)),
            target_pose=home, gains=gains))
    return WorldState(box=box_body, effectors=tuple(effectors),
                      table_height=table_height, contacts=contacts, dt=dt,
                      box_dims=box.dims)


@dataclass
class StepDiagnostics:
    """Per-step observability: applied effector wrenches plus contact
    force/torque sums per pair about the world origin (rows: the two
    bodies of the pair)."""

    eff_wrench: np.ndarray     # (2, 6)
    pair_force: np.ndarray     # (5, 2, 3)
    pair_torque: np.ndarray    # (5, 2, 3)

    def contact_active(self, pair):
        return bool(np.linalg.norm(self.pair_force[pair, 0]) > 1e-9)


def _pack_state(pose: Pose, twist: Twist):
    s = np.zeros(13)
    s[kernels.P0:kernels.P1] = pose.p
    s[kernels.Q0:kernels.Q1] = pose.q
    s[kernels.V0:kernels.V1] = twist.v
    s[kernels.W0:kernels.W1] = twist.w
    return s


def _unpack_pose(s):
    return Pose(p=s[kernels.P0:kernels.P1].copy(), q=s[kernels.Q0:kernels.Q1].copy())


def _unpack_twist(s):
    return Twist(v=s[kernels.V0:kernels.V1].copy(), w=s[kernels.W0:kernels.W1].copy())


class Simulation:
    """Mutable fixed-rate simulation owned by a single control-loop thread.

    Wraps the array state consumed by the kernels; other components should
    only see immutable snapshots (WorldState / Pose values)."""

    def __init__(self, world: WorldState):
        self._template = world
        self.dt = world.dt
        self.clock = world.clock
        self.tick = 0
        self.box_s = _pack_state(world.box.pose, world.box.twist)
        self.eff_s = np.stack([
            _pack_state(e.body.pose, e.body.twist) for e in world.effectors])
        self.eff_t = np.stack([
            _pack_state(e.target_pose, e.target_twist) for e in world.effectors])
        self.k_diag = np.stack([np.diag(e.gains.K) for e in world.effectors])
        self.damping = np.stack([e.gains.D for e in world.effectors])
        self.box_mass = world.box.mass
        self.box_inertia = world.box.inertia.astype(float)
        self.box_half = self._infer_box_half(world)
        self.box_corners = kernels.cuboid_corners(self.box_half)
        self.disk_pts = kernels.disk_points(world.effectors[0].face_radius)
        self.eff_mass = world.effectors[0].body.mass
        self.eff_inertia = world.effectors[0].body.inertia.astype(float)
        c = world.contacts
        self.contacts = c
        self.table_height = world.table_height
        self.gravity = world.gravity
        self._diag = StepDiagnostics(
            eff_wrench=np.zeros((2, 6)),
            pair_force=np.zeros((5, 2, 3)),
            pair_torque=np.zeros((5, 2, 3)))

    def _infer_box_half(self, world):
        if world.box_dims is not None:
            return np.array(world.box_dims, dtype=float) / 2.0
        # invert the uniform-cuboid inertia formula
        m = world.box.mass / 12.0
        ix, iy, iz = world.box.inertia
        dx2 = max((iy + iz - ix) / (2.0 * m), 1e-12)
        dy2 = max((ix + iz - iy) / (2.0 * m), 1e-12)
        dz2 = max((ix + iy - iz) / (2.0 * m), 1e-12)
        return 0.5 * np.sqrt(np.array([dx2, dy2, dz2]))

    # -- inputs -----------------------------------------------------------

    def set_target(self, side, pose: Pose, twist: Twist = None):
        self.eff_t[side] = _pack_state(pose, twist or Twist.zero())

    def set_box_pose(self, pose: Pose, twist: Twist = None):
        self.box_s = _pack_state(pose, twist or Twist.zero())

    # -- views ------------------------------------------------------------

    @property
    def diag(self) -> StepDiagnostics:
        return self._diag

    def box_pose(self) -> Pose:
        return _unpack_pose(self.box_s)

    def box_twist(self) -> Twist:
        return _unpack_twist(self.box_s)

    def effector_pose(self, side) -> Pose:
        return _unpack_pose(self.eff_s[side])

    def effector_twist(self, side) -> Twist:
        return _unpack_twist(self.eff_s[side])

    def effector_target(self, side) -> Pose:
        return _unpack_pose(self.eff_t[side])

    def effector_wrench(self, side) -> Wrench:
        return Wrench.from_array(self._diag.eff_wrench[side])

    def world_state(self) -> WorldState:
        effectors = tuple(
            replace(e,
                    body=replace(e.body, pose=self.effector_pose(i),
                                 twist=self.effector_twist(i)),
                    target_pose=self.effector_target(i),
                    target_twist=_unpack_twist(self.eff_t[i]))
            for i, e in enumerate(self._template.effectors))
        return replace(self._template,
                       box=replace(self._template.box, pose=self.box_pose(),
                                   twist=self.box_twist()),
                       effectors=effectors, clock=self.clock)

    # -- stepping ---------------------------------------------------------

    def step(self, n=1):
        c = self.contacts
        for _ in range(n):
            kernels.step_kernel(
                self.box_s, self.eff_s, self.eff_t,
                self.box_mass, self.box_inertia, self.box_corners, self.box_half,
                self.eff_mass, self.eff_inertia, self.disk_pts,
                self.k_diag, self.damping, WRENCH_SATURATION,
                c.k_n, c.d_n, c.mu, c.slip_eps,
                self.table_height, self.gravity, self.dt,
                self._diag.eff_wrench, self._diag.pair_force,
                self._diag.pair_torque)
            self.tick += 1
            self.clock = self.tick * self.dt
        if not (np.all(np.isfinite(self.box_s)) and np.all(np.isfinite(self.eff_s))):
            raise SimulationFault(
                "non-finite simulation state",
                {"tick": self.tick, "box": self.box_s.tolist(),
                 "effectors": self.eff_s.tolist()})


def step(world: WorldState):
    """Pure single-step function: WorldState in, (WorldState, diagnostics) out."""
    sim = Simulation(world)
    sim.step()
    return sim.world_state(), sim.diag


# ---------------------------------------------------------------------------
# pairwise contact query
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContactGeometry:
    """Shape annotation for a pairwise contact query.

    kind_a / kind_b in {"disk", "cuboid", "halfspace"}; supported pairs are
    disk-cuboid, disk-halfspace and cuboid-halfspace."""

    kind_a: str
    kind_b: str
    disk_radius: float = EFFECTOR_FACE_RADIUS
    half_dims: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_BOX_HALF))
    halfspace_height: float = 0.0


DEFAULT_BOX_HALF = tuple(d / 2.0 for d in BoxSpec().dims)


def contact_forces(body_a: RigidBody, body_b: RigidBody | None,
                   geometry: ContactGeometry,
                   params: ContactParams | None = None):
    """Contact wrench pair (on A, on B) about each body's COM; zero when
    separated. body_b is ignored for half-space geometries."""
    params = params or ContactParams()
    sa = _pack_state(body_a.pose, body_a.twist)
    fa = np.zeros(3)
    ta = np.zeros(3)
    fb = np.zeros(3)
    tb = np.zeros(3)
    pair_f = np.zeros((2, 3))
    pair_tau = np.zeros((2, 3))
    kind = (geometry.kind_a, geometry.kind_b)
    if kind == ("disk", "cuboid"):
        if body_b is None:
            raise ValueError("disk-cuboid contact needs both bodies")
        sb = _pack_state(body_b.pose, body_b.twist)
        kernels.points_vs_cuboid(
            sa, kernels.disk_points(geometry.disk_radius), sb,
            np.asarray(geometry.half_dims, dtype=float),
            params.k_n, params.d_n, params.mu, params.slip_eps,
            fa, ta, fb, tb, pair_f, pair_tau)
    elif kind == ("disk", "halfspace"):
        kernels.points_vs_halfspace(
            sa, kernels.disk_points(geometry.disk_radius),
            geometry.halfspace_height,
            params.k_n, params.d_n, params.mu, params.slip_eps,
            fa, ta, pair_f, pair_tau)
    elif kind == ("cuboid", "halfspace"):
        kernels.points_vs_halfspace(
            sa, kernels.cuboid_corners(np.asarray(geometry.half_dims, dtype=float)),
            geometry.halfspace_height,
            params.k_n, params.d_n, params.mu, params.slip_eps,
            fa, ta, pair_f, pair_tau)
    else:
        raise ValueError(f"unsupported geometry pair {kind}")
    if kind[1] == "halfspace":
        # reaction on the half-space, reported about the world origin
        fb, tb = pair_f[1], pair_tau[1]
    return Wrench(f=fa, tau=ta), Wrench(f=fb, tau=tb)


def squeeze_hold_check(world: WorldState, squeeze_depth: float) -> bool:
    """Can a symmetric two-face squeeze at the given target depth hold the
    box against gravity?

    The per-face normal force is the equilibrium of the impedance spring in
    series with the contact penalty spring; holding requires the two-face
    Coulomb friction budget to cover the box weight."""
    if squeeze_depth <= 0.0:
        return False
    k_t = world.effectors[0].gains.k_trans
    k_n = world.contacts.k_n
    f_n = k_t * k_n / (k_t + k_n) * squeeze_depth
    return bool(2.0 * world.contacts.mu * f_n >= world.box.mass * world.gravity)


def squeeze_normal_force(world: WorldState, squeeze_depth: float) -> float:
    """Series-spring equilibrium per-face normal force for a target placed
    squeeze_depth behind the contacted face."""
    k_t = world.effectors[0].gains.k_trans
    k_n = world.contacts.k_n
    return k_t * k_n / (k_t + k_n) * max(squeeze_depth, 0.0)
