/**
 * Session client: websocket wrapper around the gateway protocol.
 *
 * The transport is abstracted behind a minimal socket interface so the
 * same client runs on a browser WebSocket, the `ws` package in Node, or an
 * in-process loopback in tests. Snapshots feed the interpolation buffer;
 * staleness beyond `staleMs` flags the connection degraded and suppresses
 * outgoing input.
 */

import { InterpolationBuffer } from "./interp";
import { decodeFrame, encodeFrame, ProtocolError } from "./protocol";
import type {
  Condition,
  ControlCommand,
  Frame,
  HelloFrame,
  InputFrame,
  SnapshotFrame,
} from "./protocol";

/** The subset of the WebSocket API the client needs. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export interface ClientOptions {
  /** Snapshot age (wall ms) past which the connection counts as degraded. */
  staleMs?: number;
  now?: () => number;
}

export class SessionClient {
  readonly buffer = new InterpolationBuffer();
  hello: HelloFrame | null = null;
  lastError: string | null = null;
  onSnapshot: ((snap: SnapshotFrame) => void) | null = null;
  onError: ((message: string) => void) | null = null;

  private readonly staleMs: number;
  private readonly now: () => number;
  private socket: SocketLike | null = null;
  private closed = false;

  constructor(opts: ClientOptions = {}) {
    this.staleMs = opts.staleMs ?? 250;
    this.now = opts.now ?? (() => Date.now());
  }

  attach(socket: SocketLike): void {
    this.socket = socket;
    this.closed = false;
    socket.onmessage = (ev) => this.handleMessage(ev.data);
    socket.onclose = () => { this.closed = true; };
  }

  get connected(): boolean {
    return this.socket !== null && !this.closed;
  }

  /** True when no snapshot has arrived within the staleness window. */
  get degraded(): boolean {
    return !this.connected || this.buffer.ageMs(this.now()) > this.staleMs;
  }

  get latest(): SnapshotFrame | null {
    return this.buffer.latest;
  }

  /** Send one hand sample; dropped while the connection is degraded. */
  sendInput(frame: InputFrame): boolean {
    if (!this.socket || this.degraded) return false;
    this.socket.send(encodeFrame(frame as unknown as Record<string, unknown> & { type: string }));
    return true;
  }

  sendControl(command: ControlCommand, condition?: Condition): void {
    if (!this.socket) throw new Error("not connected");
    const frame: Record<string, unknown> & { type: string } =
      { type: "control", command };
    if (condition !== undefined) frame.condition = condition;
    this.socket.send(encodeFrame(frame));
  }

  close(): void {
    this.socket?.close();
    this.closed = true;
  }

  private handleMessage(data: string): void {
    let frame: Frame;
    try {
      frame = decodeFrame(data);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.lastError = err.message;
        this.onError?.(err.message);
        return;
      }
      throw err;
    }
    switch (frame.type) {
      case "hello":
        this.hello = frame;
        break;
      case "snapshot":
        this.buffer.push(frame, this.now());
        this.onSnapshot?.(frame);
        break;
      case "error":
        this.lastError = frame.message;
        this.onError?.(frame.message);
        break;
      default:
        // input/control are client->server only; a compliant server never
        // sends them, so just record the anomaly
        this.lastError = `unexpected ${frame.type} frame from server`;
        this.onError?.(this.lastError);
    }
  }
}
