"""Real-time bridge between the simulation and the operator UI.

One websocket session per simulation: JSON text frames in both directions
(see protocol.md). Inputs are queued and applied at the next physics tick;
snapshots are decimated to ~60 Hz from the 1 kHz simulation. The sim
thread owns the world; the network side talks to it only through the input
queue and the immutable latest-snapshot slot.
"""

import json
import threading
import time
from collections import deque

import numpy as np

from .clutch import ClutchChannel
from .geometry import Pose, Twist
from .harness import TraceRow, _Monitors, save_trace
from .tasks import Scenario, TargetTracker

PROTOCOL_VERSION = 1
SNAPSHOT_HZ = 60.0
HANDS = ("left", "right")
COMMANDS = ("start", "stop", "set-condition", "load-scenario",
            "reset-box-upright")


class ProtocolError(ValueError):
    pass


# ---------------------------------------------------------------------------
# frame encode / decode
# ---------------------------------------------------------------------------

def encode_frame(frame: dict) -> str:
    if "type" not in frame:
        raise ProtocolError("frame needs a type")
    out = dict(frame)
    out.setdefault("version", PROTOCOL_VERSION)
    return json.dumps(out)


def decode_frame(text: str) -> dict:
    """Parse and validate one frame; unknown fields are kept (forward
    compatibility), unknown types and version mismatches are rejected."""
    try:
        frame = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"invalid JSON: {e}") from None
    if not isinstance(frame, dict):
        raise ProtocolError("frame must be a JSON object")
    version = frame.get("version")
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {version!r}")
    ftype = frame.get("type")
    if ftype == "input":
        _require(frame, "time_s", "hand", "position_m", "quaternion_wxyz", "button")
        if frame["hand"] not in HANDS:
            raise ProtocolError(f"unknown hand {frame['hand']!r}")
        for key, n in (("position_m", 3), ("quaternion_wxyz", 4)):
            if len(frame[key]) != n:
                raise ProtocolError(f"{key} must have {n} components")
    elif ftype == "control":
        _require(frame, "command")
        if frame["command"] not in COMMANDS:
            raise ProtocolError(f"unknown control command {frame['command']!r}")
    elif ftype in ("snapshot", "error", "hello"):
        pass
    else:
        raise ProtocolError(f"unknown frame type {ftype!r}")
    return frame


def _require(frame, *keys):
    for k in keys:
        if k not in frame:
            raise ProtocolError(f"{frame.get('type')} frame missing {k!r}")


def input_frame_to_trace_row(frame, clock) -> TraceRow:
    return TraceRow(
        time_s=clock,
        hand=frame["hand"],
        pose=Pose(p=np.array(frame["position_m"], dtype=float),
                  q=np.array(frame["quaternion_wxyz"], dtype=float)),
        twist=Twist(v=np.array(frame.get("linear_mps", (0.0, 0.0, 0.0)), dtype=float),
                    w=np.array(frame.get("angular_radps", (0.0, 0.0, 0.0)), dtype=float)),
        button=bool(frame["button"]))


# ---------------------------------------------------------------------------
# session
# ---------------------------------------------------------------------------

class SimSession:
    """Owns one simulation plus its clutch channels and target tracker.

    Inputs arrive through `submit`; `step_pending` applies them and
    advances the world. In interactive mode a background thread paces the
    stepping against the wall clock with catch-up; headless callers drive
    `advance_ticks` directly in virtual time.
    """

    def __init__(self, scenario: Scenario, condition="vis", trace_path=None,
                 realtime=True):
        from .harness import build_simulation

        self.scenario = scenario
        self.condition = condition
        self.trace_path = trace_path
        self.realtime = realtime
        self.sim = build_simulation(scenario)
        self.tracker = TargetTracker(scenario)
        self.monitors = _Monitors(
            resting_z=scenario.table_height + scenario.box.resting_height)
        self.channels = {
            hand: ClutchChannel(home_target=self.sim.effector_target(i))
            for i, hand in enumerate(HANDS)
        }
        self.running = False
        self.trace: list[TraceRow] = []
        self._inputs = deque()
        self._last_input_time = {}
        self._lock = threading.Lock()
        self._snapshot = None
        self._snapshot_ticks = max(1, int(round(1.0 / (SNAPSHOT_HZ * self.sim.dt))))
        self._stop = threading.Event()
        self._thread = None
        self._publish_snapshot()

    # -- inputs ------------------------------------------------------------

    def submit(self, frame: dict):
        """Queue a decoded input/control frame for the next tick boundary."""
        if frame["type"] == "input":
            last = self._last_input_time.get(frame["hand"])
            if last is not None and frame["time_s"] < last:
                raise ProtocolError("input timestamps must be monotone per hand")
            self._last_input_time[frame["hand"]] = frame["time_s"]
        elif frame["command"] not in COMMANDS:
            raise ProtocolError(f"unknown control command {frame['command']!r}")
        with self._lock:
            self._inputs.append(frame)

    def release_clutches(self):
        """Disconnect safety: freeze both targets (clutch released)."""
        with self._lock:
            self._inputs.append({"type": "control", "command": "_release"})

    # -- stepping ----------------------------------------------------------

    def _apply_pending(self):
        while True:
            with self._lock:
                if not self._inputs:
                    return
                frame = self._inputs.popleft()
            if frame["type"] == "input":
                self._apply_input(frame)
            else:
                self._apply_control(frame)

    def _apply_input(self, frame):
        hand = frame["hand"]
        side = HANDS.index(hand)
        row = input_frame_to_trace_row(frame, self.sim.clock)
        self.trace.append(row)
        target, twist = self.channels[hand].update(row.pose, row.twist, row.button)
        self.sim.set_target(side, target, twist)

    def _apply_control(self, frame):
        cmd = frame["command"]
        if cmd == "start":
            self.running = True
        elif cmd == "stop":
            self.running = False
            if self.trace_path:
                save_trace(self.trace, self.trace_path)
        elif cmd == "_release":
            for i, hand in enumerate(HANDS):
                ch = self.channels[hand]
                ch.release()
                self.sim.set_target(i, ch.last_target, Twist.zero())
        elif cmd == "set-condition":
            cond = frame.get("condition")
            if cond in ("vis", "novis"):
                self.condition = cond
        elif cmd == "reset-box-upright":
            self._reset_box_upright()
        elif cmd == "load-scenario":
            pass   # single-scenario sessions; accepted as a no-op

    def _reset_box_upright(self):
        """Stand the box upright in place without letting it end up closer
        to the active target than it was."""
        from .geometry import quat_from_matrix, rot_z
        from .harness import _yaw_of

        pose = self.sim.box_pose()
        target = self.tracker.current_target
        p = pose.p.copy()
        p[2] = self.scenario.table_height + self.scenario.box.resting_height
        upright = Pose(p=p, q=quat_from_matrix(rot_z(_yaw_of(pose))))
        if target is not None:
            d_old = float(np.linalg.norm(pose.p - target.pose.p))
            if float(np.linalg.norm(upright.p - target.pose.p)) < d_old:
                # push out horizontally (z is fixed by the table) until the
                # distance to the target is back to its pre-reset value
                dz = upright.p[2] - target.pose.p[2]
                need = np.sqrt(max(d_old * d_old - dz * dz, 0.0))
                off = upright.p[:2] - target.pose.p[:2]
                n = float(np.linalg.norm(off))
                direction = off / n if n > 1e-9 else np.array([1.0, 0.0])
                p = upright.p.copy()
                p[:2] = target.pose.p[:2] + direction * need
                upright = Pose(p=p, q=upright.q)
        self.sim.set_box_pose(upright, Twist.zero())

    def advance_ticks(self, n):
        """Step n physics ticks, applying queued inputs at each boundary."""
        for _ in range(n):
            self._apply_pending()
            if self.running:
                self.sim.step()
                self.monitors.update(self.sim)
                self.tracker.advance(self.sim.box_pose(), self.sim.clock)
            if self.sim.tick % self._snapshot_ticks == 0:
                self._publish_snapshot()

    # -- snapshots ---------------------------------------------------------

    def _publish_snapshot(self):
        self._snapshot = self.build_snapshot()

    @property
    def latest_snapshot(self):
        return self._snapshot

    def build_snapshot(self) -> dict:
        """Single-tick-consistent state snapshot.

        In the novis condition the impedance-target pose and offset fields
        are omitted so a compliant UI cannot render them; everything the
        physics consumes is unaffected."""
        sim = self.sim
        vis = self.condition == "vis"
        effectors = []
        for i in range(2):
            pose = sim.effector_pose(i)
            target = sim.effector_target(i)
            wrench = sim.effector_wrench(i)
            entry = {
                "position_m": pose.p.tolist(),
                "quaternion_wxyz": pose.q.tolist(),
                "wrench": {"force_n": wrench.f.tolist(),
                           "torque_nm": wrench.tau.tolist()},
            }
            if vis:
                entry["target_position_m"] = target.p.tolist()
                entry["target_quaternion_wxyz"] = target.q.tolist()
                # recomputed, never trusted from elsewhere
                entry["offset_m"] = (target.p - pose.p).tolist()
            effectors.append(entry)
        box_pose = sim.box_pose()
        t = self.tracker.current_target
        return {
            "type": "snapshot",
            "version": PROTOCOL_VERSION,
            "tick": sim.tick,
            "clock_s": sim.clock,
            "condition": self.condition,
            "box": {"position_m": box_pose.p.tolist(),
                    "quaternion_wxyz": box_pose.q.tolist()},
            "effectors": effectors,
            "target": None if t is None else {
                "position_m": t.pose.p.tolist(),
                "quaternion_wxyz": t.pose.q.tolist(),
                "pos_tol_m": t.pos_tol,
                "rot_tol_rad": t.rot_tol,
            },
            "trial": {
                "running": self.running,
                "target_index": self.tracker.index,
                "target_count": len(self.scenario.targets),
                "finished": self.tracker.finished,
                "drop_count": self.monitors.drop_count,
                "flip_count": self.monitors.flip_count,
            },
        }

    # -- wall-clock loop ---------------------------------------------------

    def start_thread(self):
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._run_loop, daemon=True)
        self._thread.start()

    def stop_thread(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None

    def _run_loop(self):
        dt = self.sim.dt
        start = time.monotonic()
        done = 0
        while not self._stop.is_set():
            due = int((time.monotonic() - start) / dt)
            # catch-up stepping, bounded so a stall cannot wedge the loop
            pending = min(due - done, 200)
            if pending > 0:
                self.advance_ticks(pending)
                done = due
            time.sleep(dt)


# ---------------------------------------------------------------------------
# FastAPI app
# ---------------------------------------------------------------------------

def create_app(session: SimSession):
    import asyncio
    from contextlib import asynccontextmanager

    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    @asynccontextmanager
    async def lifespan(app):
        if session.realtime:
            session.start_thread()
        yield
        session.stop_thread()

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        await ws.send_text(encode_frame({"type": "hello",
                                         "snapshot_hz": SNAPSHOT_HZ}))
        stop = asyncio.Event()

        async def sender():
            last_tick = -1
            while not stop.is_set():
                snap = session.latest_snapshot
                if snap is not None and snap["tick"] != last_tick:
                    last_tick = snap["tick"]
                    await ws.send_text(encode_frame(snap))
                await asyncio.sleep(1.0 / SNAPSHOT_HZ / 2.0)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    frame = decode_frame(text)
                    if frame["type"] not in ("input", "control"):
                        raise ProtocolError(
                            f"client may not send {frame['type']!r} frames")
                    session.submit(frame)
                except ProtocolError as e:
                    await ws.send_text(encode_frame({"type": "error",
                                                     "message": str(e)}))
        except WebSocketDisconnect:
            pass
        finally:
            stop.set()
            send_task.cancel()
            session.release_clutches()

    return app
