/**
 * Device input -> hand-sample mapping.
 *
 * Two device modes share one output contract: a stream of per-hand input
 * frames (pose + finite-differenced twist + clutch bit).
 *
 *  - mouse: dragging moves the hand in the camera-aligned horizontal plane
 *    at `gain` meters per screen unit; Shift maps vertical drag to world z;
 *    Ctrl maps horizontal drag to yaw. The clutch is the primary button
 *    (or a configurable key).
 *  - gamepad: left/right sticks drive the corresponding hand's velocity;
 *    shoulder triggers are the clutches.
 *
 * Emitted hand poses are continuous while a drag persists; frames are only
 * emitted while a device event or engaged clutch requires them (no pose
 * spam when idle). On device loss a single clutch-release frame is emitted.
 */

import { encodeFrame } from "./protocol";
import type { Hand, InputFrame, QuatWxyz, Vec3 } from "./protocol";

export type DeviceMode = "mouse" | "gamepad";

export interface MappingOptions {
  mode?: DeviceMode;
  /** Meters of hand translation per screen unit (px) of drag. */
  gain?: number;
  hand?: Hand;
  /** Yaw radians per screen unit while the rotation modifier is held. */
  rotGain?: number;
}

export interface MouseEventLike {
  dx: number;           // screen-units moved since the previous event
  dy: number;
  buttons: number;      // bit 0 = primary
  shiftKey?: boolean;
  ctrlKey?: boolean;
}

export interface GamepadStateLike {
  axes: number[];       // [lx, ly, rx, ry]
  clutch: [boolean, boolean];
  connected: boolean;
}

function yawQuat(yaw: number): QuatWxyz {
  return [Math.cos(yaw / 2), 0, 0, Math.sin(yaw / 2)];
}

interface HandState {
  p: Vec3;
  yaw: number;
  button: 0 | 1;
  lastTime: number;
  lastP: Vec3;
  lastYaw: number;
}

export class InputMapping {
  readonly mode: DeviceMode;
  readonly gain: number;
  readonly rotGain: number;
  private readonly hands: Record<Hand, HandState>;
  private frames: InputFrame[] = [];
  private deviceLost = false;

  constructor(opts: MappingOptions = {}) {
    this.mode = opts.mode ?? "mouse";
    this.gain = opts.gain ?? 0.001;
    this.rotGain = opts.rotGain ?? 0.01;
    const mk = (): HandState => ({
      p: [0, 0, 0.5], yaw: 0, button: 0,
      lastTime: 0, lastP: [0, 0, 0.5], lastYaw: 0,
    });
    this.hands = { left: mk(), right: mk() };
  }

  /** Frames produced since the last drain, oldest first. */
  drain(): InputFrame[] {
    const out = this.frames;
    this.frames = [];
    return out;
  }

  drainEncoded(): string[] {
    return this.drain().map((f) => encodeFrame(f as unknown as Record<string, unknown> & { type: string }));
  }

  handPose(hand: Hand): { position_m: Vec3; yaw: number; button: 0 | 1 } {
    const h = this.hands[hand];
    return { position_m: [...h.p], yaw: h.yaw, button: h.button };
  }

  /** One mouse event for the active hand at client time `timeS`. */
  mouseEvent(ev: MouseEventLike, timeS: number, hand: Hand = "left"): void {
    if (this.mode !== "mouse") throw new Error("mapping is not in mouse mode");
    const h = this.hands[hand];
    const pressed: 0 | 1 = (ev.buttons & 1) !== 0 ? 1 : 0;
    if (ev.ctrlKey) {
      h.yaw += ev.dx * this.rotGain;
    } else if (ev.shiftKey) {
      h.p = [h.p[0], h.p[1], h.p[2] - ev.dy * this.gain];
    } else {
      // screen x -> world x, screen y (down-positive) -> world -y
      h.p = [h.p[0] + ev.dx * this.gain, h.p[1] - ev.dy * this.gain, h.p[2]];
    }
    const transition = pressed !== h.button;
    h.button = pressed;
    if (pressed || transition) this.emit(hand, timeS);
  }

  /** One gamepad poll at client time `timeS`; `dtS` since the last poll. */
  gamepadPoll(state: GamepadStateLike, timeS: number, dtS: number): void {
    if (this.mode !== "gamepad") throw new Error("mapping is not in gamepad mode");
    if (!state.connected) {
      this.deviceLoss(timeS);
      return;
    }
    this.deviceLost = false;
    const speed = 0.5; // m/s at full stick deflection
    const sticks: [Hand, number, number][] = [
      ["left", state.axes[0] ?? 0, state.axes[1] ?? 0],
      ["right", state.axes[2] ?? 0, state.axes[3] ?? 0],
    ];
    sticks.forEach(([hand, ax, ay], i) => {
      const h = this.hands[hand];
      const pressed: 0 | 1 = state.clutch[i] ? 1 : 0;
      const moved = Math.abs(ax) > 1e-3 || Math.abs(ay) > 1e-3;
      if (moved) {
        h.p = [h.p[0] + ax * speed * dtS, h.p[1] - ay * speed * dtS, h.p[2]];
      }
      const transition = pressed !== h.button;
      h.button = pressed;
      if ((pressed && moved) || transition) this.emit(hand, timeS);
    });
  }

  /** Device disappeared: emit one release per engaged hand, then go quiet. */
  deviceLoss(timeS: number): void {
    if (this.deviceLost) return;
    this.deviceLost = true;
    for (const hand of ["left", "right"] as Hand[]) {
      if (this.hands[hand].button) {
        this.hands[hand].button = 0;
        this.emit(hand, timeS);
      }
    }
  }

  private emit(hand: Hand, timeS: number): void {
    const h = this.hands[hand];
    // monotone per-hand timestamps even if the caller's clock stalls
    const t = Math.max(timeS, h.lastTime + 1e-6);
    const dt = t - h.lastTime;
    const v: Vec3 = h.lastTime === 0 || dt <= 0
      ? [0, 0, 0]
      : [(h.p[0] - h.lastP[0]) / dt, (h.p[1] - h.lastP[1]) / dt,
         (h.p[2] - h.lastP[2]) / dt];
    const w: Vec3 = h.lastTime === 0 || dt <= 0
      ? [0, 0, 0]
      : [0, 0, (h.yaw - h.lastYaw) / dt];
    this.frames.push({
      type: "input", version: 1, time_s: t, hand,
      position_m: [...h.p], quaternion_wxyz: yawQuat(h.yaw),
      linear_mps: v, angular_radps: w, button: h.button,
    });
    h.lastTime = t;
    h.lastP = [...h.p];
    h.lastYaw = h.yaw;
  }
}
