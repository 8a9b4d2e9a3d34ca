import { describe, expect, it } from "vitest";

import { HudModel } from "../src/hud";
import { snapshot } from "./fixtures";

describe("hud view-model", () => {
  it("shows trial progress and per-target elapsed time", () => {
    const hud = new HudModel();
    const a = snapshot({ tick: 1000 });
    expect(hud.derive(a, false)).toMatchObject({
      progress: "target 3 / 8",
      elapsed: "0.0 s",
      banner: null,
    });
    const b = snapshot({ tick: 13400 });
    expect(hud.derive(b, false).elapsed).toBe("12.4 s");
  });

  it("resets the per-target clock when the target index changes", () => {
    const hud = new HudModel();
    hud.derive(snapshot({ tick: 1000 }), false);
    const next = snapshot({ tick: 9000 });
    next.trial.target_index = 3;
    expect(hud.derive(next, false).elapsed).toBe("0.0 s");
  });

  it("raises the degraded banner", () => {
    const hud = new HudModel();
    expect(hud.derive(snapshot(), true).banner).toBe("connection degraded");
    expect(hud.derive(null, true).banner).toBe("connection degraded");
  });

  it("reports finished trials", () => {
    const hud = new HudModel();
    const snap = snapshot({ finished: true });
    snap.trial.finished = true;
    expect(hud.derive(snap, false).progress).toBe("finished 8 / 8");
  });
});
