/**
 * Browser entry point: wires websocket client, scene, input mapping and
 * HUD onto the page. URL parameters: ?host=..&port=..&condition=vis|novis.
 */

import * as THREE from "three";
import { SessionClient } from "./client";
import { HudModel } from "./hud";
import { InputMapping } from "./input";
import type { Condition } from "./protocol";
import { SceneModel } from "./scene";
import { TraceRecorder } from "./trace";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const port = params.get("port") ?? "8734";
const condition = (params.get("condition") ?? "vis") as Condition;

const canvas = document.getElementById("view") as HTMLCanvasElement;
const hudEl = document.getElementById("hud")!;
const bannerEl = document.getElementById("banner")!;
const opacityEl = document.getElementById("opacity") as HTMLInputElement | null;
const gainEl = document.getElementById("gain") as HTMLInputElement | null;

const scene = new SceneModel({
  overlayOpacity: opacityEl ? Number(opacityEl.value) : 0.5,
});
const hud = new HudModel();
const recorder = new TraceRecorder();
const mapping = new InputMapping({
  mode: "mouse",
  gain: gainEl ? Number(gainEl.value) : 0.001,
});

const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
renderer.setSize(window.innerWidth, window.innerHeight);
const camera = new THREE.PerspectiveCamera(
  50, window.innerWidth / window.innerHeight, 0.01, 20);
camera.up.set(0, 0, 1);
camera.position.set(1.0, -1.2, 0.9);
camera.lookAt(0, 0, 0.2);

const client = new SessionClient();
const ws = new WebSocket(`ws://${host}:${port}/session`);
const adapter = {
  send: (d: string) => ws.send(d),
  close: () => ws.close(),
  onmessage: null as ((ev: { data: string }) => void) | null,
  onclose: null as (() => void) | null,
};
ws.onmessage = (ev) => adapter.onmessage?.({ data: String(ev.data) });
ws.onclose = () => adapter.onclose?.();
ws.onopen = () => {
  client.attach(adapter);
  client.sendControl("set-condition", condition);
  client.sendControl("start");
};

let activeHand: "left" | "right" = "left";
window.addEventListener("keydown", (ev) => {
  if (ev.key === "Tab") {
    ev.preventDefault();
    activeHand = activeHand === "left" ? "right" : "left";
  }
});

let lastXY: [number, number] | null = null;
canvas.addEventListener("pointermove", (ev) => {
  const dx = lastXY ? ev.clientX - lastXY[0] : 0;
  const dy = lastXY ? ev.clientY - lastXY[1] : 0;
  lastXY = [ev.clientX, ev.clientY];
  mapping.mouseEvent(
    { dx, dy, buttons: ev.buttons, shiftKey: ev.shiftKey, ctrlKey: ev.ctrlKey },
    performance.now() / 1000, activeHand);
  flushInput();
});
canvas.addEventListener("pointerdown", (ev) => {
  mapping.mouseEvent(
    { dx: 0, dy: 0, buttons: ev.buttons, shiftKey: ev.shiftKey, ctrlKey: ev.ctrlKey },
    performance.now() / 1000, activeHand);
  flushInput();
});
canvas.addEventListener("pointerup", (ev) => {
  mapping.mouseEvent(
    { dx: 0, dy: 0, buttons: ev.buttons, shiftKey: ev.shiftKey, ctrlKey: ev.ctrlKey },
    performance.now() / 1000, activeHand);
  flushInput();
});

function flushInput(): void {
  for (const frame of mapping.drain()) {
    if (client.sendInput(frame)) recorder.record(frame);
  }
}

opacityEl?.addEventListener("input", () => {
  // recreate overlays lazily: opacity applies to newly-built overlay nodes
  // and, for live ones, directly to their materials
  const o = Number(opacityEl.value);
  for (let i = 0; i < 2; i++) {
    const disk = scene.targetDisk(i);
    if (disk) (disk.material as THREE.Material & { opacity: number }).opacity = o;
  }
});

function frame(now: number): void {
  const snap = client.buffer.sample(now);
  if (snap) scene.apply(snap);
  const hudState = hud.derive(client.latest, client.degraded);
  hudEl.textContent =
    `${hudState.progress}   ${hudState.elapsed}   ${hudState.incidents}`;
  bannerEl.textContent = hudState.banner ?? "";
  bannerEl.style.display = hudState.banner ? "block" : "none";
  renderer.render(scene.scene, camera);
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

// expose the recorded trace for download via the console or a button
(window as any).downloadTrace = () => {
  const blob = new Blob([recorder.toCsv()], { type: "text/csv" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "session-trace.csv";
  a.click();
};
