import { describe, expect, it } from "vitest";

import { SessionClient } from "../src/client";
import type { SocketLike } from "../src/client";
import { encodeFrame } from "../src/protocol";
import type { InputFrame } from "../src/protocol";
import { snapshot } from "./fixtures";

/** In-process loopback: captures sends, lets the test inject messages. */
class LoopbackSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  inject(data: string): void {
    this.onmessage?.({ data });
  }
}

const inputFrame = (t = 0.1): InputFrame => ({
  type: "input", version: 1, time_s: t, hand: "left",
  position_m: [0, 0, 0.5], quaternion_wxyz: [1, 0, 0, 0], button: 1,
});

function freshPair(now: { t: number }) {
  const client = new SessionClient({ now: () => now.t });
  const sock = new LoopbackSocket();
  client.attach(sock);
  return { client, sock };
}

describe("session client", () => {
  it("stores the hello frame", () => {
    const now = { t: 0 };
    const { client, sock } = freshPair(now);
    sock.inject(encodeFrame({ type: "hello", snapshot_hz: 60.0 }));
    expect(client.hello?.snapshot_hz).toBe(60.0);
  });

  it("feeds snapshots into the interpolation buffer and callback", () => {
    const now = { t: 1000 };
    const { client, sock } = freshPair(now);
    const seen: number[] = [];
    client.onSnapshot = (s) => seen.push(s.tick);
    sock.inject(encodeFrame(snapshot({ tick: 100 }) as never));
    now.t = 1016;
    sock.inject(encodeFrame(snapshot({ tick: 116 }) as never));
    expect(seen).toEqual([100, 116]);
    expect(client.latest?.tick).toBe(116);
  });

  it("flags the connection degraded after the staleness window", () => {
    const now = { t: 1000 };
    const { client, sock } = freshPair(now);
    sock.inject(encodeFrame(snapshot() as never));
    expect(client.degraded).toBe(false);
    now.t = 1200;
    expect(client.degraded).toBe(false);
    now.t = 1300;
    expect(client.degraded).toBe(true);
  });

  it("suppresses input while degraded", () => {
    const now = { t: 1000 };
    const { client, sock } = freshPair(now);
    sock.inject(encodeFrame(snapshot() as never));
    expect(client.sendInput(inputFrame())).toBe(true);
    now.t = 2000; // stale
    expect(client.sendInput(inputFrame(0.2))).toBe(false);
    expect(sock.sent.length).toBe(1);
  });

  it("surfaces server error frames without dying", () => {
    const now = { t: 0 };
    const { client, sock } = freshPair(now);
    const errors: string[] = [];
    client.onError = (m) => errors.push(m);
    sock.inject(encodeFrame({ type: "error", message: "bad frame" }));
    sock.inject("{garbage");
    sock.inject(encodeFrame(snapshot() as never));
    expect(errors.length).toBe(2);
    expect(client.latest).not.toBeNull();
  });

  it("marks the session disconnected when the socket closes", () => {
    const now = { t: 0 };
    const { client, sock } = freshPair(now);
    expect(client.connected).toBe(true);
    sock.close();
    expect(client.connected).toBe(false);
    expect(client.degraded).toBe(true);
  });

  it("sends control frames with optional condition", () => {
    const now = { t: 0 };
    const { client, sock } = freshPair(now);
    client.sendControl("set-condition", "novis");
    const sent = JSON.parse(sock.sent[0]);
    expect(sent.command).toBe("set-condition");
    expect(sent.condition).toBe("novis");
  });

  it("local input -> snapshot round trip stays under 100 ms", async () => {
    // loopback responder: every input is answered with a snapshot on the
    // next macrotask, emulating the server's tick boundary
    const client = new SessionClient();
    const sock = new LoopbackSocket();
    let tick = 0;
    sock.send = (data: string) => {
      sock.sent.push(data);
      setImmediate(() => {
        tick += 1;
        sock.inject(encodeFrame(snapshot({ tick }) as never));
      });
    };
    client.attach(sock);
    sock.inject(encodeFrame(snapshot({ tick }) as never)); // not degraded
    const t0 = performance.now();
    const roundTrip = new Promise<number>((resolve) => {
      client.onSnapshot = () => resolve(performance.now() - t0);
    });
    expect(client.sendInput(inputFrame())).toBe(true);
    const elapsed = await roundTrip;
    expect(elapsed).toBeLessThan(100);
  });
});
