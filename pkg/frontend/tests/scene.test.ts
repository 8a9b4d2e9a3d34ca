import { describe, expect, it } from "vitest";

import { SceneModel } from "../src/scene";
import { snapshot } from "./fixtures";

describe("scene fidelity", () => {
  it("renders disk poses exactly equal to snapshot target fields", () => {
    const scene = new SceneModel();
    const snap = snapshot({ vis: true });
    scene.apply(snap);
    for (let i = 0; i < 2; i++) {
      const eff = snap.effectors[i];
      const disk = scene.targetDisk(i)!;
      expect(disk.position.toArray()).toEqual(eff.target_position_m);
      const [w, x, y, z] = eff.target_quaternion_wxyz!;
      expect([disk.quaternion.x, disk.quaternion.y, disk.quaternion.z, disk.quaternion.w])
        .toEqual([x, y, z, w]);
    }
  });

  it("renders line endpoints exactly equal to current/target positions", () => {
    const scene = new SceneModel();
    const snap = snapshot({ vis: true });
    scene.apply(snap);
    for (let i = 0; i < 2; i++) {
      const eff = snap.effectors[i];
      const [a, b] = scene.lineEndpoints(i)!;
      expect(a).toEqual(eff.position_m);
      expect(b).toEqual(eff.target_position_m);
    }
  });

  it("offset (0.1,0,0) yields a world-space line of length 0.1", () => {
    const scene = new SceneModel();
    const snap = snapshot({ vis: true });
    const eff = snap.effectors[0];
    eff.target_position_m = [eff.position_m[0] + 0.1, eff.position_m[1], eff.position_m[2]];
    eff.offset_m = [0.1, 0, 0];
    scene.apply(snap);
    const [a, b] = scene.lineEndpoints(0)!;
    const len = Math.hypot(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
    expect(len).toBeCloseTo(0.1, 12);
  });

  it("novis snapshots leave zero overlay nodes in the graph", () => {
    const scene = new SceneModel();
    scene.apply(snapshot({ vis: false }));
    expect(scene.overlayNodeCount()).toBe(0);
    // body geometry still rendered
    expect(scene.box.position.x).toBeCloseTo(0.012, 12);
    // the task target cuboid is part of the task, not the overlay
    expect(scene.taskTarget.visible).toBe(true);
  });

  it("toggling condition takes effect within one snapshot", () => {
    const scene = new SceneModel();
    scene.apply(snapshot({ vis: true }));
    expect(scene.overlayNodeCount()).toBe(4); // 2 disks + 2 lines
    scene.apply(snapshot({ vis: false, tick: 5116 }));
    expect(scene.overlayNodeCount()).toBe(0);
    scene.apply(snapshot({ vis: true, tick: 5132 }));
    expect(scene.overlayNodeCount()).toBe(4);
  });

  it("overlay disks are translucent (default 50%)", () => {
    const scene = new SceneModel();
    scene.apply(snapshot({ vis: true }));
    const mat = scene.targetDisk(0)!.material as { transparent: boolean; opacity: number };
    expect(mat.transparent).toBe(true);
    expect(mat.opacity).toBeCloseTo(0.5, 12);
    const custom = new SceneModel({ overlayOpacity: 0.2 });
    custom.apply(snapshot({ vis: true }));
    expect((custom.targetDisk(0)!.material as { opacity: number }).opacity).toBeCloseTo(0.2, 12);
  });

  it("hides the task cuboid when the scenario is finished", () => {
    const scene = new SceneModel();
    scene.apply(snapshot({ finished: true }));
    expect(scene.taskTarget.visible).toBe(false);
  });

  it("binds box and effector poses verbatim", () => {
    const scene = new SceneModel();
    const snap = snapshot();
    scene.apply(snap);
    expect(scene.box.position.toArray()).toEqual(snap.box.position_m);
    for (let i = 0; i < 2; i++) {
      expect(scene.effectors[i].position.toArray()).toEqual(snap.effectors[i].position_m);
    }
  });
});
