/** Shared snapshot fixtures for the test suite. */

import type { EffectorFields, SnapshotFrame } from "../src/protocol";

export function effector(i: number, vis: boolean): EffectorFields {
  const base: EffectorFields = {
    position_m: [-0.095 + 0.19 * i, 0.001 * i, 0.9],
    quaternion_wxyz: [0.7071067811865476, 0, 0.7071067811865476 * (i ? -1 : 1), 0],
    wrench: { force_n: [6.1, 0, 4.9], torque_nm: [0, 0.02, 0] },
  };
  if (vis) {
    base.target_position_m = [-0.03 + 0.06 * i, 0.002, 0.91];
    base.target_quaternion_wxyz = [1, 0, 0, 0];
    base.offset_m = [
      base.target_position_m[0] - base.position_m[0],
      base.target_position_m[1] - base.position_m[1],
      base.target_position_m[2] - base.position_m[2],
    ];
  }
  return base;
}

export function snapshot(opts: {
  tick?: number;
  vis?: boolean;
  finished?: boolean;
  running?: boolean;
} = {}): SnapshotFrame {
  const vis = opts.vis ?? true;
  const tick = opts.tick ?? 5100;
  return {
    type: "snapshot",
    version: 1,
    tick,
    clock_s: tick / 1000,
    condition: vis ? "vis" : "novis",
    box: {
      position_m: [0.012, -0.003, 0.0994 + tick * 1e-7],
      quaternion_wxyz: [0.999, 0, 0, 0.0447],
    },
    effectors: [effector(0, vis), effector(1, vis)],
    target: opts.finished ? null : {
      position_m: [0.25, 0.1, 0.3],
      quaternion_wxyz: [0.96, 0, 0, 0.28],
      pos_tol_m: 0.03,
      rot_tol_rad: 0.4,
    },
    trial: {
      running: opts.running ?? true,
      target_index: 2,
      target_count: 8,
      finished: opts.finished ?? false,
      drop_count: 0,
      flip_count: 0,
    },
  };
}
