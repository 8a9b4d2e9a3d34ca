/**
 * Two-snapshot interpolation buffer.
 *
 * Display frames run faster than the 60 Hz snapshot stream, so rigid-body
 * poses (box, effectors, task target) are interpolated between the two most
 * recent snapshots to smooth motion. Impedance-overlay fields are *never*
 * interpolated: they are copied verbatim from the newer snapshot, keeping
 * the rendered controller state an exact data binding.
 */

import type { QuatWxyz, SnapshotFrame, Vec3 } from "./protocol";

function lerpVec3(a: Vec3, b: Vec3, t: number): Vec3 {
  return [
    a[0] + (b[0] - a[0]) * t,
    a[1] + (b[1] - a[1]) * t,
    a[2] + (b[2] - a[2]) * t,
  ];
}

/** Normalized linear quaternion interpolation along the shorter arc. */
function nlerpQuat(a: QuatWxyz, b: QuatWxyz, t: number): QuatWxyz {
  const dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
  const s = dot < 0 ? -1 : 1;
  const out: QuatWxyz = [
    a[0] + (s * b[0] - a[0]) * t,
    a[1] + (s * b[1] - a[1]) * t,
    a[2] + (s * b[2] - a[2]) * t,
    a[3] + (s * b[3] - a[3]) * t,
  ];
  const n = Math.hypot(out[0], out[1], out[2], out[3]);
  return [out[0] / n, out[1] / n, out[2] / n, out[3] / n];
}

export class InterpolationBuffer {
  private prev: SnapshotFrame | null = null;
  private next: SnapshotFrame | null = null;
  /** Wall-clock ms at which `next` arrived. */
  private nextArrivalMs = 0;
  private intervalMs = 1000 / 60;

  push(snapshot: SnapshotFrame, nowMs: number): void {
    if (this.next) {
      const gap = nowMs - this.nextArrivalMs;
      if (gap > 0 && gap < 1000) this.intervalMs = gap;
    }
    this.prev = this.next;
    this.next = snapshot;
    this.nextArrivalMs = nowMs;
  }

  get latest(): SnapshotFrame | null {
    return this.next;
  }

  /** Milliseconds since the most recent snapshot arrived. */
  ageMs(nowMs: number): number {
    return this.next ? nowMs - this.nextArrivalMs : Infinity;
  }

  /**
   * Snapshot to draw at wall-clock `nowMs`: body poses blended between the
   * buffered pair, everything else (condition, overlay fields, trial state)
   * verbatim from the newest snapshot. With fewer than two snapshots
   * buffered, returns the newest unchanged.
   */
  sample(nowMs: number): SnapshotFrame | null {
    const next = this.next;
    if (!next) return null;
    const prev = this.prev;
    if (!prev) return next;
    const t = Math.min(Math.max((nowMs - this.nextArrivalMs) / this.intervalMs, 0), 1);
    if (t >= 1) return next;
    return {
      ...next,
      box: {
        position_m: lerpVec3(prev.box.position_m, next.box.position_m, t),
        quaternion_wxyz: nlerpQuat(prev.box.quaternion_wxyz,
                                   next.box.quaternion_wxyz, t),
      },
      effectors: next.effectors.map((eff, i) => {
        const old = prev.effectors[i];
        if (!old) return eff;
        return {
          ...eff, // overlay fields stay verbatim from the newest snapshot
          position_m: lerpVec3(old.position_m, eff.position_m, t),
          quaternion_wxyz: nlerpQuat(old.quaternion_wxyz, eff.quaternion_wxyz, t),
        };
      }),
    };
  }
}
