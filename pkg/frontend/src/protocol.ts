/**
 * Frame codec for the gateway websocket protocol (see ../protocol.md).
 *
 * All frames are JSON text objects carrying `type` and `version`. The
 * decoder validates structure and units-bearing field shapes; unknown
 * fields inside a known frame are preserved.
 */

export const PROTOCOL_VERSION = 1;

export type Hand = "left" | "right";
export const HANDS: readonly Hand[] = ["left", "right"];

export type Condition = "vis" | "novis";

export type Vec3 = [number, number, number];
/** Unit quaternion, scalar first: [w, x, y, z]. */
export type QuatWxyz = [number, number, number, number];

export interface HelloFrame {
  type: "hello";
  version: number;
  snapshot_hz: number;
}

export interface WrenchFields {
  force_n: Vec3;
  torque_nm: Vec3;
}

export interface EffectorFields {
  position_m: Vec3;
  quaternion_wxyz: QuatWxyz;
  wrench: WrenchFields;
  /** Impedance-target pose; present only in the `vis` condition. */
  target_position_m?: Vec3;
  target_quaternion_wxyz?: QuatWxyz;
  /** target_position_m − position_m; present only in the `vis` condition. */
  offset_m?: Vec3;
}

export interface TaskTargetFields {
  position_m: Vec3;
  quaternion_wxyz: QuatWxyz;
  pos_tol_m: number;
  rot_tol_rad: number;
}

export interface TrialFields {
  running: boolean;
  target_index: number;
  target_count: number;
  finished: boolean;
  drop_count: number;
  flip_count: number;
}

export interface SnapshotFrame {
  type: "snapshot";
  version: number;
  tick: number;
  clock_s: number;
  condition: Condition;
  box: { position_m: Vec3; quaternion_wxyz: QuatWxyz };
  effectors: EffectorFields[];
  target: TaskTargetFields | null;
  trial: TrialFields;
}

export interface InputFrame {
  type: "input";
  version: number;
  time_s: number;
  hand: Hand;
  position_m: Vec3;
  quaternion_wxyz: QuatWxyz;
  linear_mps?: Vec3;
  angular_radps?: Vec3;
  button: 0 | 1;
}

export type ControlCommand =
  | "start"
  | "stop"
  | "set-condition"
  | "load-scenario"
  | "reset-box-upright";

export const CONTROL_COMMANDS: readonly ControlCommand[] = [
  "start", "stop", "set-condition", "load-scenario", "reset-box-upright",
];

export interface ControlFrame {
  type: "control";
  version: number;
  command: ControlCommand;
  condition?: Condition;
}

export interface ErrorFrame {
  type: "error";
  version: number;
  message: string;
}

export type Frame =
  | HelloFrame
  | SnapshotFrame
  | InputFrame
  | ControlFrame
  | ErrorFrame;

export class ProtocolError extends Error {}

const FRAME_TYPES = new Set(["hello", "snapshot", "input", "control", "error"]);

function requireVector(obj: Record<string, unknown>, key: string, n: number): void {
  const v = obj[key];
  if (!Array.isArray(v) || v.length !== n || !v.every((x) => typeof x === "number" && Number.isFinite(x))) {
    throw new ProtocolError(`field '${key}' must be a finite ${n}-vector`);
  }
}

function validateInput(frame: Record<string, unknown>): void {
  for (const key of ["time_s", "hand", "position_m", "quaternion_wxyz", "button"]) {
    if (!(key in frame)) throw new ProtocolError(`input frame missing '${key}'`);
  }
  if (!HANDS.includes(frame.hand as Hand)) {
    throw new ProtocolError(`unknown hand '${String(frame.hand)}'`);
  }
  requireVector(frame, "position_m", 3);
  requireVector(frame, "quaternion_wxyz", 4);
  if ("linear_mps" in frame) requireVector(frame, "linear_mps", 3);
  if ("angular_radps" in frame) requireVector(frame, "angular_radps", 3);
}

function validateControl(frame: Record<string, unknown>): void {
  if (!CONTROL_COMMANDS.includes(frame.command as ControlCommand)) {
    throw new ProtocolError(`unknown control command '${String(frame.command)}'`);
  }
}

/** Serialize a frame, stamping the protocol version. */
export function encodeFrame(frame: Record<string, unknown> & { type: string }): string {
  return JSON.stringify({ version: PROTOCOL_VERSION, ...frame });
}

/** Parse and validate one frame of JSON text. */
export function decodeFrame(text: string): Frame {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    throw new ProtocolError("frame is not valid JSON");
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ProtocolError("frame must be a JSON object");
  }
  const frame = obj as Record<string, unknown>;
  if (frame.version !== PROTOCOL_VERSION) {
    throw new ProtocolError(`unsupported protocol version ${String(frame.version)}`);
  }
  if (!FRAME_TYPES.has(frame.type as string)) {
    throw new ProtocolError(`unknown frame type '${String(frame.type)}'`);
  }
  if (frame.type === "input") validateInput(frame);
  if (frame.type === "control") validateControl(frame);
  return frame as unknown as Frame;
}
