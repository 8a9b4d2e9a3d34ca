/**
 * Input-trace recorder.
 *
 * Accumulates the hand samples a session sent and serializes them in the
 * simulator harness's trace CSV format, so a live UI session can be
 * replayed tick-exactly with `teleimp run --policy replay --trace ...`.
 */

import type { InputFrame } from "./protocol";

export const TRACE_COLUMNS = [
  "time_s", "hand", "px", "py", "pz", "qw", "qx", "qy", "qz",
  "vx", "vy", "vz", "wx", "wy", "wz", "button",
] as const;

/** Shortest round-trip decimal representation, like Python's repr(float). */
function num(x: number): string {
  const s = String(x);
  // String(1e21) etc. already round-trips; integers need a trailing .0 to
  // match the harness's repr() output
  return /^[+-]?\d+$/.test(s) ? `${s}.0` : s;
}

export class TraceRecorder {
  private rows: InputFrame[] = [];

  record(frame: InputFrame): void {
    this.rows.push(frame);
  }

  get length(): number {
    return this.rows.length;
  }

  toCsv(): string {
    const lines = [TRACE_COLUMNS.join(",")];
    for (const f of this.rows) {
      const v = f.linear_mps ?? [0, 0, 0];
      const w = f.angular_radps ?? [0, 0, 0];
      lines.push([
        num(f.time_s), f.hand,
        ...f.position_m.map(num), ...f.quaternion_wxyz.map(num),
        ...v.map(num), ...w.map(num),
        f.button ? "1" : "0",
      ].join(","));
    }
    return lines.join("\r\n") + "\r\n";
  }
}
