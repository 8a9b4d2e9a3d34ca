/**
 * HUD view-model: pure derivation of the status strings shown over the
 * canvas (trial progress, per-target elapsed time, incidents, connection
 * state). Kept free of DOM so it is unit-testable.
 */

import type { SnapshotFrame } from "./protocol";

export interface HudState {
  progress: string;      // e.g. "target 3 / 8"
  elapsed: string;       // per-target elapsed, e.g. "12.4 s"
  incidents: string;     // e.g. "drops 1 · flips 0"
  banner: string | null; // "connection degraded" or null
}

export class HudModel {
  private targetIndex = -1;
  private targetStartClock = 0;

  derive(snapshot: SnapshotFrame | null, degraded: boolean): HudState {
    if (!snapshot) {
      return { progress: "—", elapsed: "—", incidents: "—",
               banner: degraded ? "connection degraded" : null };
    }
    const t = snapshot.trial;
    if (t.target_index !== this.targetIndex) {
      this.targetIndex = t.target_index;
      this.targetStartClock = snapshot.clock_s;
    }
    const elapsed = snapshot.clock_s - this.targetStartClock;
    return {
      progress: t.finished
        ? `finished ${t.target_count} / ${t.target_count}`
        : `target ${t.target_index + 1} / ${t.target_count}`,
      elapsed: `${elapsed.toFixed(1)} s`,
      incidents: `drops ${t.drop_count} · flips ${t.flip_count}`,
      banner: degraded ? "connection degraded" : null,
    };
  }
}
