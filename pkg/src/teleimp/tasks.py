"""Box repositioning tasks: target specs, completion test, scenario files.

A target counts as complete when the box center is within the position
tolerance and the orientation is within the angular tolerance of either the
target orientation or its 180-degree-yaw twin.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .geometry import Pose, quat_from_matrix, quat_mul, quat_to_matrix, rot_z, rotation_vector

# Box used in all default scenarios: 16 x 16 x 20 cm, 635 g.
DEFAULT_BOX_DIMS = (0.16, 0.16, 0.20)
DEFAULT_BOX_MASS = 0.635

# Completion tolerances: 30 mm position, 0.4 rad orientation.
DEFAULT_POS_TOL = 0.030
DEFAULT_ROT_TOL = 0.4

LIFT_HEIGHT_RANGE = (0.05, 0.25)   # box-bottom height above the table, m

TASK_TYPES = ("lifting", "sliding")


@dataclass(frozen=True)
class BoxSpec:
    dims: tuple = DEFAULT_BOX_DIMS
    mass: float = DEFAULT_BOX_MASS
    yaw_symmetry: bool = True

    def __post_init__(self):
        if any(d <= 0 for d in self.dims) or self.mass <= 0:
            raise ValueError("box dimensions and mass must be positive")
        object.__setattr__(self, "dims", tuple(float(d) for d in self.dims))

    @property
    def resting_height(self):
        return self.dims[2] / 2.0

    @property
    def inertia(self):
        """Principal moments of a uniform-density cuboid, kg*m^2."""
        dx, dy, dz = self.dims
        m = self.mass / 12.0
        return np.array([m * (dy * dy + dz * dz),
                         m * (dx * dx + dz * dz),
                         m * (dx * dx + dy * dy)])


@dataclass(frozen=True)
class TargetSpec:
    pose: Pose
    pos_tol: float = DEFAULT_POS_TOL
    rot_tol: float = DEFAULT_ROT_TOL
    yaw_symmetry: bool = True

    def __post_init__(self):
        if self.pos_tol <= 0 or not (0 < self.rot_tol < np.pi):
            raise ValueError("tolerances out of range")


# 180-degree symmetry rotation about the vertical axis
R_SYM = rot_z(np.pi)


def is_complete(box_pose: Pose, target: TargetSpec) -> bool:
    """Position within pos_tol and orientation within rot_tol of the target
    or (when symmetric) its 180-degree-yaw twin."""
    if np.linalg.norm(box_pose.p - target.pose.p) >= target.pos_tol:
        return False
    Rb, Rt = box_pose.R, target.pose.R
    ang = np.linalg.norm(rotation_vector(Rb.T @ Rt))
    if target.yaw_symmetry:
        ang = min(ang, np.linalg.norm(rotation_vector(Rb.T @ R_SYM @ Rt)))
    return bool(ang < target.rot_tol)


@dataclass(frozen=True)
class Scenario:
    task_type: str
    targets: tuple
    seed: int = 0
    box: BoxSpec = field(default_factory=BoxSpec)
    table_height: float = 0.0

    def __post_init__(self):
        if self.task_type not in TASK_TYPES:
            raise ValueError(f"unknown task type {self.task_type!r}")
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.task_type == "lifting" and len(self.targets) > 1:
            heights = [t.pose.p[2] for t in self.targets]
            if len(set(np.round(heights, 6))) != len(heights):
                raise ValueError("lifting targets must have distinct heights")


MAX_TARGETS = 64


def generate_scenario(task_type, count, seed, workspace=((-0.22, 0.22), (-0.15, 0.15)),
                      box: BoxSpec | None = None, table_height=0.0) -> Scenario:
    """Seeded target layout with the study's qualitative constraints.

    Sliding targets sit at box-resting height with yaw-only rotation;
    lifting targets get distinct heights 5-25 cm above the table. Yaw
    spread guarantees at least one consecutive pair differing by more than
    the rotation tolerance, forcing an occasional regrasp.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count > MAX_TARGETS:
        raise ValueError(f"count {count} exceeds feasible placements ({MAX_TARGETS})")
    box = box or BoxSpec()
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1) = workspace
    targets = []
    yaws = []
    if task_type == "lifting":
        lo, hi = LIFT_HEIGHT_RANGE
        # distinct heights: evenly spread levels, shuffled
        levels = lo + (hi - lo) * (np.arange(count) + 0.5) / max(count, 1)
        rng.shuffle(levels)
    for i in range(count):
        x = rng.uniform(x0, x1)
        y = rng.uniform(y0, y1)
        yaw = rng.uniform(-np.pi, np.pi)
        if task_type == "sliding":
            z = table_height + box.resting_height
        else:
            z = table_height + levels[i] + box.resting_height
        targets.append(TargetSpec(
            pose=Pose(p=np.array([x, y, z]), q=quat_from_matrix(rot_z(yaw))),
            yaw_symmetry=box.yaw_symmetry))
        yaws.append(yaw)
    if count >= 2:
        gaps = [_yaw_gap(a, b) for a, b in zip(yaws, yaws[1:])]
        if max(gaps) <= DEFAULT_ROT_TOL:
            # force one regrasp-inducing yaw change
            t = targets[-1]
            q = quat_mul(quat_from_matrix(rot_z(np.pi / 2.0)), t.pose.q)
            targets[-1] = replace(t, pose=Pose(p=t.pose.p, q=q))
    return Scenario(task_type=task_type, targets=tuple(targets), seed=int(seed),
                    box=box, table_height=float(table_height))


def _yaw_gap(a, b):
    d = abs(a - b) % (2.0 * np.pi)
    return min(d, 2.0 * np.pi - d)


@dataclass(frozen=True)
class CompletionEvent:
    target_index: int
    clock: float
    scenario_finished: bool = False


class TargetTracker:
    """Advances through a scenario's targets, latching one completion event
    per target the first instant the completion predicate holds."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.index = 0
        self.events = []

    @property
    def finished(self):
        return self.index >= len(self.scenario.targets)

    @property
    def current_target(self) -> TargetSpec | None:
        if self.finished:
            return None
        return self.scenario.targets[self.index]

    def advance(self, box_pose: Pose, clock: float):
        """Check the active target; returns newly emitted events."""
        new = []
        if not self.finished and is_complete(box_pose, self.current_target):
            self.index += 1
            new.append(CompletionEvent(target_index=self.index - 1, clock=clock,
                                       scenario_finished=self.finished))
        self.events.extend(new)
        return new


# ---------------------------------------------------------------------------
# scenario files (YAML)
# ---------------------------------------------------------------------------

def _pose_to_dict(pose: Pose):
    return {"position_m": [float(v) for v in pose.p],
            "quaternion_wxyz": [float(v) for v in pose.q]}


def _pose_from_dict(d):
    return Pose(p=np.array(d["position_m"], dtype=float),
                q=np.array(d["quaternion_wxyz"], dtype=float))


def scenario_to_dict(s: Scenario):
    return {
        "task_type": s.task_type,
        "seed": s.seed,
        "table_height_m": s.table_height,
        "box": {"dims_m": list(s.box.dims), "mass_kg": s.box.mass,
                "yaw_symmetry": s.box.yaw_symmetry},
        "targets": [
            {"pose": _pose_to_dict(t.pose),
             "pos_tol_m": t.pos_tol,
             "rot_tol_rad": t.rot_tol,
             "yaw_symmetry": t.yaw_symmetry}
            for t in s.targets
        ],
    }


def scenario_from_dict(d) -> Scenario:
    box = BoxSpec(dims=tuple(d["box"]["dims_m"]), mass=float(d["box"]["mass_kg"]),
                  yaw_symmetry=bool(d["box"].get("yaw_symmetry", True)))
    targets = tuple(
        TargetSpec(pose=_pose_from_dict(t["pose"]),
                   pos_tol=float(t.get("pos_tol_m", DEFAULT_POS_TOL)),
                   rot_tol=float(t.get("rot_tol_rad", DEFAULT_ROT_TOL)),
                   yaw_symmetry=bool(t.get("yaw_symmetry", True)))
        for t in d["targets"]
    )
    return Scenario(task_type=d["task_type"], targets=targets,
                    seed=int(d.get("seed", 0)), box=box,
                    table_height=float(d.get("table_height_m", 0.0)))


def save_scenario(s: Scenario, path):
    with open(path, "w") as fh:
        yaml.safe_dump(scenario_to_dict(s), fh, sort_keys=False)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(yaml.safe_load(fh))
