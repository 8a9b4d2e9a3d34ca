"""Headless trial runner: scripted operators, per-target timing, CSV export.

Policies emit hand poses and clutch bits; the runner routes them through
the clutch channels into the simulation in lockstep, checks target
completion every physics tick and records one row per target.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .clutch import ClutchChannel
from .geometry import (
    Pose,
    Twist,
    compose,
    quat_from_matrix,
    quat_from_rotvec,
    quat_mul,
    quat_rotate,
    rot_y,
    rot_z,
    rotation_vector,
)
from .sim import Simulation, default_world
from .tasks import Scenario, TargetTracker

DEFAULT_TIMEOUT_S = 120.0
CONDITIONS = ("vis", "novis")

# scripted-policy motion parameters
MOVE_SPEED = 0.20        # m/s
YAW_RATE = 0.8           # rad/s
APPROACH_GAP = 0.02      # m standoff before pressing
RETRACT_GAP = 0.06       # m standoff after releasing
PRESS_TIME = 0.6         # s to ramp to full squeeze
SETTLE_TIME = 0.4        # s pause after reaching a phase goal
WAIT_TIME = 0.25         # s clutch-released pause between targets

PLACE_SPEED = 0.05       # m/s controlled descent when putting the box down

DROP_HEIGHT_MARGIN = 0.005  # box counts as airborne this far above resting
DROP_LANDING_SPEED = 0.12   # m/s; faster landings count as drops
FLIP_ANGLE = 1.2            # rad tilt of the box vertical axis


@dataclass(frozen=True)
class TrialRecord:
    agent_id: str
    condition: str
    task_type: str
    target_index: int
    completed: bool
    completion_time: float | None   # seconds; None when the target timed out
    drop_count: int = 0
    flip_count: int = 0


CSV_COLUMNS = ("agent_id", "condition", "task_type", "target_index",
               "completed", "completion_time_s", "drop_count", "flip_count")


def export_csv(records, path_or_file):
    """Write trial records; stable column order, SI units."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([
                r.agent_id, r.condition, r.task_type, r.target_index,
                int(r.completed),
                "" if r.completion_time is None else repr(r.completion_time),
                r.drop_count, r.flip_count,
            ])
    finally:
        if own:
            fh.close()


def import_csv(path_or_file):
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, newline="") if own else path_or_file
    try:
        rows = list(csv.reader(fh))
    finally:
        if own:
            fh.close()
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("unrecognized trial CSV header")
    out = []
    for row in rows[1:]:
        out.append(TrialRecord(
            agent_id=row[0], condition=row[1], task_type=row[2],
            target_index=int(row[3]), completed=bool(int(row[4])),
            completion_time=None if row[5] == "" else float(row[5]),
            drop_count=int(row[6]), flip_count=int(row[7])))
    return out


def records_to_csv_bytes(records):
    buf = io.StringIO(newline="")
    export_csv(records, buf)
    return buf.getvalue().encode()


# ---------------------------------------------------------------------------
# input traces (timestamped hand pose + clutch rows)
# ---------------------------------------------------------------------------

TRACE_COLUMNS = ("time_s", "hand", "px", "py", "pz", "qw", "qx", "qy", "qz",
                 "vx", "vy", "vz", "wx", "wy", "wz", "button")


@dataclass(frozen=True)
class TraceRow:
    time_s: float
    hand: str           # "left" | "right"
    pose: Pose
    twist: Twist
    button: bool


def save_trace(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in rows:
            w.writerow([repr(r.time_s), r.hand,
                        *[repr(float(x)) for x in r.pose.p],
                        *[repr(float(x)) for x in r.pose.q],
                        *[repr(float(x)) for x in r.twist.v],
                        *[repr(float(x)) for x in r.twist.w],
                        int(r.button)])


def load_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_COLUMNS:
        raise ValueError("unrecognized input-trace header")
    out = []
    last_t = {}
    for row in rows[1:]:
        t = float(row[0])
        hand = row[1]
        if hand in last_t and t < last_t[hand]:
            raise ValueError("trace timestamps must be monotone per hand")
        last_t[hand] = t
        vals = [float(x) for x in row[2:15]]
        out.append(TraceRow(
            time_s=t, hand=hand,
            pose=Pose(p=np.array(vals[0:3]), q=np.array(vals[3:7])),
            twist=Twist(v=np.array(vals[7:10]), w=np.array(vals[10:13])),
            button=bool(int(row[15]))))
    return out


# ---------------------------------------------------------------------------
# observation handed to policies every tick
# ---------------------------------------------------------------------------

@dataclass
class TrialObs:
    tick: int
    clock: float
    dt: float
    box_pose: Pose
    eff_pose: tuple
    eff_target: tuple
    target_spec: object          # TargetSpec or None when finished
    target_index: int
    box_half: np.ndarray
    table_height: float
    resting_height: float


HandCmd = tuple  # (Pose, Twist, bool)


class OperatorPolicy:
    """Scripted stand-in for a human operator."""

    kind = "base"

    def reset(self, scenario: Scenario, world):
        pass

    def commands(self, obs: TrialObs):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# scripted box manipulation policy
# ---------------------------------------------------------------------------

def _yaw_of(pose: Pose):
    ex = quat_rotate(pose.q, np.array([1.0, 0.0, 0.0]))
    return float(np.arctan2(ex[1], ex[0]))


def _wrap_pi(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def _grasp_offset(side, half_x, depth):
    """Effector target pose in the (desired) box frame: face-aligned disk
    pressed `depth` into the +-x face (negative depth = standoff)."""
    if side == 0:
        return Pose(p=np.array([-(half_x - depth), 0.0, 0.0]),
                    q=quat_from_matrix(rot_y(np.pi / 2.0)))
    return Pose(p=np.array([half_x - depth, 0.0, 0.0]),
                q=quat_from_matrix(rot_y(-np.pi / 2.0)))


def _upright_pose(p, yaw):
    return Pose(p=np.asarray(p, dtype=float), q=quat_from_matrix(rot_z(yaw)))


class ScriptedBoxPolicy(OperatorPolicy):
    """Approach-squeeze-carry state machine for both task types.

    Lifting carries the box through the air to the target pose; sliding
    keeps the desired box height at the resting height throughout. The
    squeeze depth is the policy's force-regulation knob: too shallow and
    the friction budget cannot hold the box weight.
    """

    def __init__(self, task_type, squeeze_depth=0.05):
        self.task_type = task_type
        self.kind = "scripted-lift" if task_type == "lifting" else "scripted-slide"
        self.squeeze_depth = float(squeeze_depth)

    def reset(self, scenario, world):
        self.phase = "plan"
        self.phase_t0 = 0.0
        self.duration = 0.0
        self.target_index = -1
        self.prev_cmd = None
        self.move_from = None
        self.move_to = None
        self.hold_depth = self.squeeze_depth
        self.engaged = False
        self._settle_until = 0.0

    # -- phase machinery --------------------------------------------------

    def _phase_time(self, obs):
        return obs.clock - self.phase_t0

    def _desired_targets(self, obs, box_pose_desired, depth):
        hx = obs.box_half[0]
        return tuple(compose(box_pose_desired, _grasp_offset(s, hx, depth))
                     for s in range(2))

    def _plan_move(self, obs):
        """Interpolated desired box pose from its current pose to the active
        target, with yaw symmetry picking the nearer orientation."""
        t = obs.target_spec
        start_yaw = _yaw_of(obs.box_pose)
        goal_yaw = _yaw_of(t.pose)
        dyaw = _wrap_pi(goal_yaw - start_yaw)
        if t.yaw_symmetry and abs(dyaw) > np.pi / 2.0:
            dyaw = _wrap_pi(dyaw - np.sign(dyaw) * np.pi)
        p0 = obs.box_pose.p.copy()
        p0[2] = max(p0[2], obs.resting_height + obs.table_height)
        p1 = t.pose.p.copy()
        if self.task_type == "sliding":
            p1 = p1.copy()
            p1[2] = obs.table_height + obs.resting_height
        dist = float(np.linalg.norm(p1 - p0))
        dur = max(dist / MOVE_SPEED, abs(dyaw) / YAW_RATE, 0.1)
        self.move_from = (p0, start_yaw)
        self.move_to = (p1, start_yaw + dyaw)
        return dur

    def _move_pose(self, frac):
        (p0, y0), (p1, y1) = self.move_from, self.move_to
        frac = min(max(frac, 0.0), 1.0)
        return _upright_pose(p0 + frac * (p1 - p0), y0 + frac * (y1 - y0))

    # -- per-tick command -------------------------------------------------

    def commands(self, obs: TrialObs):
        if obs.target_spec is None:
            return self._emit(obs, None, engaged=False)

        if obs.target_index != self.target_index:
            self.target_index = obs.target_index
            if self.phase in ("move", "hold") and self.task_type == "lifting":
                # put the box down before regrasping for the next target
                p = obs.box_pose.p.copy()
                dz = p[2] - (obs.table_height + obs.resting_height)
                self.move_from = (p.copy(), _yaw_of(obs.box_pose))
                p_down = p.copy()
                p_down[2] = obs.table_height + obs.resting_height
                self.move_to = (p_down, _yaw_of(obs.box_pose))
                self._enter("lower", obs, max(dz / PLACE_SPEED, 0.1))
            else:
                self._enter("open", obs, 0.5)

        phase = self.phase
        t = self._phase_time(obs)

        if phase == "plan":
            self._enter("approach", obs)
            phase, t = "approach", 0.0

        if phase == "lower":
            frac = t / self.duration
            desired = self._move_pose(frac)
            if t >= self.duration + SETTLE_TIME:
                self._enter("open", obs)
            return self._emit(obs, self._desired_targets(obs, desired, self.hold_depth))

        if phase == "open":
            # retract to standoff around wherever the box is now
            desired = _upright_pose(obs.box_pose.p, _yaw_of(obs.box_pose))
            goals = self._desired_targets(obs, desired, -RETRACT_GAP)
            cur, done = self._chase(obs, goals)
            if done:
                self._enter("wait", obs, WAIT_TIME)
            return self._emit(obs, cur)

        if phase == "wait":
            # clutch released; reposition the hand away to exercise the
            # anchor logic, then re-engage
            if t >= self.duration:
                self._enter("approach", obs)
            return self._emit(obs, None, engaged=False)

        if phase == "approach":
            desired = _upright_pose(obs.box_pose.p, _yaw_of(obs.box_pose))
            goals = self._desired_targets(obs, desired, -APPROACH_GAP)
            cur, done = self._chase(obs, goals)
            if done:
                if self._settle_until == 0.0:
                    self._settle_until = t + SETTLE_TIME
                elif t >= self._settle_until:
                    self._enter("press", obs, PRESS_TIME)
            return self._emit(obs, cur)

        if phase == "press":
            desired = _upright_pose(obs.box_pose.p, _yaw_of(obs.box_pose))
            frac = min(t / self.duration, 1.0)
            depth = -APPROACH_GAP + frac * (self.squeeze_depth + APPROACH_GAP)
            if t >= self.duration + SETTLE_TIME:
                self._enter("move", obs, self._plan_move(obs))
            return self._emit(obs, self._desired_targets(obs, desired, depth))

        if phase == "move":
            frac = t / self.duration
            desired = self._move_pose(frac)
            if t >= self.duration:
                self._enter("hold", obs, 0.0)
            return self._emit(obs, self._desired_targets(obs, desired, self.squeeze_depth))

        # hold: pin the desired box pose on the target until completion
        desired = self._move_pose(1.0)
        return self._emit(obs, self._desired_targets(obs, desired, self.squeeze_depth))

    def _enter(self, phase, obs, duration=0.0):
        self.phase = phase
        self.phase_t0 = obs.clock
        self.duration = duration
        self._settle_until = 0.0

    def _chase(self, obs, goals):
        """Step each emitted target toward its goal at a bounded rate."""
        out = []
        done = True
        for s in range(2):
            cur = obs.eff_target[s]
            goal = goals[s]
            dp = goal.p - cur.p
            dist = float(np.linalg.norm(dp))
            phi = rotation_vector(cur.R.T @ goal.R)
            ang = float(np.linalg.norm(phi))
            max_dp = MOVE_SPEED * obs.dt
            max_da = YAW_RATE * obs.dt
            if dist <= max_dp and ang <= max_da:
                out.append(goal)
            else:
                done = False
                fp = min(1.0, max_dp / dist) if dist > 0 else 1.0
                fa = min(1.0, max_da / ang) if ang > 0 else 1.0
                f = min(fp, fa)
                q = quat_mul(cur.q, quat_from_rotvec(phi * f))
                out.append(Pose(p=cur.p + f * dp, q=q))
        return tuple(out), done

    def _emit(self, obs, targets, engaged=True):
        """Translate desired effector targets into hand commands.

        While engaged, hand poses are emitted in target coordinates (the
        press sample re-anchors the hand onto the current target, making
        the mapping an identity), so the desired target pose can be sent
        as the hand pose directly."""
        engaging = engaged and targets is not None and not self.engaged
        cmds = []
        for s in range(2):
            if not engaged or targets is None:
                pose = Pose(p=obs.eff_target[s].p + np.array([0.0, 0.3, 0.1]),
                            q=obs.eff_target[s].q)
                cmds.append((pose, Twist.zero(), False))
            else:
                prev = self.prev_cmd[s] if (self.prev_cmd and self.engaged) else None
                # the press sample re-anchors the hand onto the current
                # target; emit exactly that target so hand coordinates and
                # target coordinates coincide from the next sample on
                pose = obs.eff_target[s] if engaging else targets[s]
                if prev is None:
                    twist = Twist.zero()
                else:
                    v = (pose.p - prev.p) / obs.dt
                    phi = rotation_vector(prev.R.T @ pose.R)
                    w = quat_rotate(prev.q, phi) / obs.dt
                    twist = Twist(v=v, w=w)
                cmds.append((pose, twist, True))
        self.prev_cmd = tuple(c[0] for c in cmds)
        self.engaged = engaged and targets is not None
        return tuple(cmds)


class ReplayPolicy(OperatorPolicy):
    """Replays a recorded input trace (zero-order hold per hand)."""

    kind = "replay"

    def __init__(self, rows):
        self.rows = sorted(rows, key=lambda r: r.time_s)

    def reset(self, scenario, world):
        self._cursor = 0
        self._latest = {}

    def commands(self, obs: TrialObs):
        while self._cursor < len(self.rows) and self.rows[self._cursor].time_s <= obs.clock:
            r = self.rows[self._cursor]
            self._latest[r.hand] = r
            self._cursor += 1
        out = []
        for s, hand in enumerate(("left", "right")):
            r = self._latest.get(hand)
            if r is None:
                out.append((obs.eff_target[s], Twist.zero(), False))
            else:
                out.append((r.pose, r.twist, r.button))
        return tuple(out)


def make_policy(name, **kwargs) -> OperatorPolicy:
    if name == "scripted-lift":
        return ScriptedBoxPolicy("lifting", **kwargs)
    if name == "scripted-slide":
        return ScriptedBoxPolicy("sliding", **kwargs)
    if name == "replay":
        trace = kwargs.pop("trace", None)
        if trace is None:
            raise ValueError("replay policy needs trace=rows or a trace path")
        if isinstance(trace, (str, bytes)):
            trace = load_trace(trace)
        return ReplayPolicy(trace)
    raise ValueError(f"unknown policy {name!r}")


# ---------------------------------------------------------------------------
# trial runner
# ---------------------------------------------------------------------------

@dataclass
class _Monitors:
    """Drop/flip accounting.

    A drop is logged when the box, having been grasped while airborne,
    lands on the table either without a grasp or faster than a controlled
    place-down."""

    resting_z: float
    drop_count: int = 0
    flip_count: int = 0
    _was_lifted: bool = False
    _was_on_table: bool = True
    _flipped: bool = False

    def update(self, sim: Simulation):
        diag = sim.diag
        grasped = diag.contact_active(0) and diag.contact_active(1)
        on_table = diag.contact_active(2)
        z = sim.box_s[2]
        vz = sim.box_s[9]
        airborne = (not on_table) and z > self.resting_z + DROP_HEIGHT_MARGIN
        if grasped and airborne:
            self._was_lifted = True
        if on_table and not self._was_on_table and self._was_lifted:
            if not grasped or vz < -DROP_LANDING_SPEED:
                self.drop_count += 1
            self._was_lifted = False
        self._was_on_table = on_table
        up = quat_rotate(sim.box_s[3:7], np.array([0.0, 0.0, 1.0]))
        tilted = float(np.arccos(np.clip(up[2], -1.0, 1.0))) > FLIP_ANGLE
        if tilted and not self._flipped:
            self.flip_count += 1
        self._flipped = tilted


def build_simulation(scenario: Scenario, contacts=None, gains=None) -> Simulation:
    world = default_world(box=scenario.box, table_height=scenario.table_height,
                         contacts=contacts, gains=gains)
    return Simulation(world)


def run_trial(scenario: Scenario, policy: OperatorPolicy, condition="vis",
              seed=0, agent_id=None, timeout_s=DEFAULT_TIMEOUT_S,
              state_log=None, trace_log=None, contacts=None, gains=None):
    """Run one scenario in lockstep and return one TrialRecord per target.

    Deterministic in (scenario, policy, condition, seed); the condition is
    logged metadata only and never touches the physics. state_log /
    trace_log, when given, receive per-tick state lines and the emitted
    input trace.
    """
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}")
    agent_id = agent_id or f"{policy.kind}-{seed}"
    sim = build_simulation(scenario, contacts=contacts, gains=gains)
    world = sim.world_state()
    policy.reset(scenario, world)
    channels = tuple(ClutchChannel(home_target=sim.effector_target(s))
                     for s in range(2))
    tracker = TargetTracker(scenario)
    monitors = _Monitors(resting_z=scenario.table_height + scenario.box.resting_height)
    records = []
    timeout_ticks = int(round(timeout_s / sim.dt))
    presented_tick = 0
    resting = scenario.box.resting_height

    while not tracker.finished:
        obs = TrialObs(
            tick=sim.tick, clock=sim.clock, dt=sim.dt,
            box_pose=sim.box_pose(),
            eff_pose=(sim.effector_pose(0), sim.effector_pose(1)),
            eff_target=(sim.effector_target(0), sim.effector_target(1)),
            target_spec=tracker.current_target,
            target_index=tracker.index,
            box_half=sim.box_half, table_height=sim.table_height,
            resting_height=resting)
        cmds = policy.commands(obs)
        for s in range(2):
            pose, twist, button = cmds[s]
            target, ttwist = channels[s].update(pose, twist, button)
            sim.set_target(s, target, ttwist)
            if trace_log is not None:
                trace_log.append(TraceRow(time_s=sim.clock,
                                          hand="left" if s == 0 else "right",
                                          pose=pose, twist=twist, button=button))
        sim.step()
        monitors.update(sim)
        if state_log is not None:
            state_log.write(_state_line(sim))
        idx_before = tracker.index
        events = tracker.advance(sim.box_pose(), sim.clock)
        for ev in events:
            records.append(TrialRecord(
                agent_id=agent_id, condition=condition,
                task_type=scenario.task_type, target_index=ev.target_index,
                completed=True,
                completion_time=(sim.tick - presented_tick) * sim.dt,
                drop_count=monitors.drop_count, flip_count=monitors.flip_count))
            presented_tick = sim.tick
        if not events and sim.tick - presented_tick >= timeout_ticks:
            records.append(TrialRecord(
                agent_id=agent_id, condition=condition,
                task_type=scenario.task_type, target_index=idx_before,
                completed=False, completion_time=None,
                drop_count=monitors.drop_count, flip_count=monitors.flip_count))
            tracker.index += 1
            presented_tick = sim.tick
    return records


def _state_line(sim: Simulation):
    parts = [str(sim.tick)]
    parts.extend(repr(v) for v in sim.box_s)
    for e in range(2):
        parts.extend(repr(v) for v in sim.eff_s[e])
    return ",".join(parts) + "\n"
