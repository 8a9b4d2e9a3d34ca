/**
 * Scene model: a three.js scene graph driven purely by protocol snapshots.
 *
 * Every rendered controller quantity is a direct data binding to a snapshot
 * field — the client never re-derives impedance state. The impedance-target
 * overlay (translucent blue disks + offset lines) exists in the graph only
 * while the incoming snapshot carries the target fields, so the `novis`
 * condition leaves zero overlay nodes.
 */

import * as THREE from "three";
import type { EffectorFields, SnapshotFrame, Vec3, QuatWxyz } from "./protocol";

/** Matches the simulator's effector face radius. The reference hardware's
 * disk dimensions are not specified; we mirror the sim geometry. */
export const EFFECTOR_FACE_RADIUS = 0.05;
export const EFFECTOR_THICKNESS = 0.02;
/** Default box extents (m); the protocol does not carry geometry. */
export const BOX_DIMS: Vec3 = [0.16, 0.16, 0.2];
export const TABLE_SIZE = 2.0;

export interface SceneOptions {
  boxDims?: Vec3;
  /** Overlay opacity, 0..1 (default 0.5 — translucent so the overlay does
   * not occlude the manipulated object). */
  overlayOpacity?: number;
}

function setPose(obj: THREE.Object3D, p: Vec3, q: QuatWxyz): void {
  obj.position.set(p[0], p[1], p[2]);
  // three.js quaternions are (x, y, z, w); protocol is scalar-first
  obj.quaternion.set(q[1], q[2], q[3], q[0]);
}

/** A disk whose local +z is the face normal, matching the sim's geometry. */
function makeDisk(material: THREE.Material): THREE.Mesh {
  const geo = new THREE.CylinderGeometry(
    EFFECTOR_FACE_RADIUS, EFFECTOR_FACE_RADIUS, EFFECTOR_THICKNESS, 32);
  geo.rotateX(Math.PI / 2); // cylinder axis y -> z
  return new THREE.Mesh(geo, material);
}

export class SceneModel {
  readonly scene = new THREE.Scene();
  readonly world = new THREE.Group();
  /** All impedance-visualization nodes live under this group. */
  readonly overlay = new THREE.Group();

  readonly box: THREE.Mesh;
  readonly effectors: THREE.Mesh[] = [];
  readonly taskTarget: THREE.Mesh;

  private readonly overlayOpacity: number;
  private targetDisks: (THREE.Mesh | null)[] = [null, null];
  private offsetLines: (THREE.Line | null)[] = [null, null];
  private lastSnapshot: SnapshotFrame | null = null;

  constructor(opts: SceneOptions = {}) {
    const dims = opts.boxDims ?? BOX_DIMS;
    this.overlayOpacity = opts.overlayOpacity ?? 0.5;
    this.world.name = "world";
    this.overlay.name = "impedance-overlay";
    this.scene.add(this.world, this.overlay);

    const table = new THREE.Mesh(
      new THREE.BoxGeometry(TABLE_SIZE, TABLE_SIZE, 0.02),
      new THREE.MeshStandardMaterial({ color: 0x8a7b64 }));
    table.name = "table";
    table.position.set(0, 0, -0.01);
    this.world.add(table);

    this.box = new THREE.Mesh(
      new THREE.BoxGeometry(dims[0], dims[1], dims[2]),
      new THREE.MeshStandardMaterial({ color: 0xc9bba8 }));
    this.box.name = "box";
    this.world.add(this.box);

    for (let i = 0; i < 2; i++) {
      const disk = makeDisk(new THREE.MeshStandardMaterial({ color: 0x444c55 }));
      disk.name = `effector-${i}`;
      this.effectors.push(disk);
      this.world.add(disk);
    }

    this.taskTarget = new THREE.Mesh(
      new THREE.BoxGeometry(dims[0], dims[1], dims[2]),
      new THREE.MeshStandardMaterial({
        color: 0x2ecc40, transparent: true, opacity: 0.35,
      }));
    this.taskTarget.name = "task-target";
    this.world.add(this.taskTarget);

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.6));
    const sun = new THREE.DirectionalLight(0xffffff, 1.0);
    sun.position.set(1, 1, 2);
    this.scene.add(sun);
  }

  get snapshot(): SnapshotFrame | null {
    return this.lastSnapshot;
  }

  /** Number of overlay nodes currently in the graph (0 under `novis`). */
  overlayNodeCount(): number {
    return this.overlay.children.length;
  }

  /** Bind one snapshot to the graph. Poses are copied verbatim. */
  apply(snapshot: SnapshotFrame): void {
    this.lastSnapshot = snapshot;
    setPose(this.box, snapshot.box.position_m, snapshot.box.quaternion_wxyz);

    snapshot.effectors.forEach((eff, i) => {
      setPose(this.effectors[i], eff.position_m, eff.quaternion_wxyz);
      this.applyOverlay(i, eff);
    });

    if (snapshot.target) {
      this.taskTarget.visible = true;
      setPose(this.taskTarget, snapshot.target.position_m,
              snapshot.target.quaternion_wxyz);
    } else {
      this.taskTarget.visible = false;
    }
  }

  private applyOverlay(i: number, eff: EffectorFields): void {
    const hasTarget = eff.target_position_m !== undefined
      && eff.target_quaternion_wxyz !== undefined;
    if (!hasTarget) {
      this.removeOverlay(i);
      return;
    }
    if (!this.targetDisks[i]) {
      const disk = makeDisk(new THREE.MeshStandardMaterial({
        color: 0x2e78ff, transparent: true, opacity: this.overlayOpacity,
        depthWrite: false,
      }));
      disk.name = `target-disk-${i}`;
      this.targetDisks[i] = disk;
      const line = new THREE.Line(
        new THREE.BufferGeometry().setFromPoints(
          [new THREE.Vector3(), new THREE.Vector3()]),
        new THREE.LineBasicMaterial({
          color: 0x2e78ff, transparent: true, opacity: this.overlayOpacity,
        }));
      line.name = `offset-line-${i}`;
      this.offsetLines[i] = line;
      this.overlay.add(disk, line);
    }
    setPose(this.targetDisks[i]!, eff.target_position_m!,
            eff.target_quaternion_wxyz!);
    const line = this.offsetLines[i]!;
    // authoritative endpoints live on the node in double precision; the
    // float32 draw buffer is only the GPU approximation of them
    line.userData.endpoints = [
      [...eff.position_m],
      [...eff.target_position_m!],
    ] as [Vec3, Vec3];
    const pos = line.geometry.getAttribute("position") as THREE.BufferAttribute;
    pos.setXYZ(0, eff.position_m[0], eff.position_m[1], eff.position_m[2]);
    pos.setXYZ(1, eff.target_position_m![0], eff.target_position_m![1],
               eff.target_position_m![2]);
    pos.needsUpdate = true;
  }

  private removeOverlay(i: number): void {
    const disk = this.targetDisks[i];
    const line = this.offsetLines[i];
    if (disk) this.overlay.remove(disk);
    if (line) this.overlay.remove(line);
    this.targetDisks[i] = null;
    this.offsetLines[i] = null;
  }

  /** World-space endpoints of the offset line for effector i, or null. */
  lineEndpoints(i: number): [Vec3, Vec3] | null {
    const line = this.offsetLines[i];
    if (!line) return null;
    return line.userData.endpoints as [Vec3, Vec3];
  }

  targetDisk(i: number): THREE.Mesh | null {
    return this.targetDisks[i];
  }
}
