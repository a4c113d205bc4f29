/**
 * Connection handling and outbound throttling.
 *
 * Targets queue locally and at most one `target` message leaves per animation
 * frame (the service keeps only the latest anyway). Reconnects back off
 * exponentially, 0.5 s doubling to 8 s. The socket constructor is injectable
 * so tests can run against a scripted double.
 */

import { UiSessionModel } from "./model.js";
import { ClientMessage, encodeMessage } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface CockpitOptions {
  socketFactory?: (url: string) => SocketLike;
  setTimer?: (fn: () => void, ms: number) => unknown;
  maxBackoffMs?: number;
}

export class CockpitClient {
  readonly sentLog: ClientMessage[] = [];
  private socket: SocketLike | null = null;
  private pendingTarget: [number, number, number] | null = null;
  private backoffMs = 500;
  private readonly maxBackoffMs: number;
  private readonly socketFactory: (url: string) => SocketLike;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private closedByUser = false;

  constructor(
    readonly url: string,
    readonly model: UiSessionModel,
    opts: CockpitOptions = {},
  ) {
    this.socketFactory =
      opts.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.setTimer = opts.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.maxBackoffMs = opts.maxBackoffMs ?? 8000;
  }

  connect(): void {
    this.model.connection = "connecting";
    const ws = this.socketFactory(this.url);
    this.socket = ws;
    ws.onopen = () => {
      this.model.connection = "open";
      this.backoffMs = 500;
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data === "string") this.model.ingest(ev.data);
    };
    ws.onerror = () => {
      /* close follows; the close handler owns reconnection */
    };
    ws.onclose = () => {
      this.model.connection = "closed";
      this.socket = null;
      if (this.closedByUser) return;
      this.model.reconnectAttempts += 1;
      this.setTimer(() => this.connect(), this.backoffMs);
      this.backoffMs = Math.min(this.backoffMs * 2, this.maxBackoffMs);
    };
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
  }

  private send(msg: ClientMessage): void {
    if (this.model.connection !== "open" || !this.socket) return;
    this.socket.send(encodeMessage(msg));
    this.sentLog.push(msg);
  }

  /** Queue the latest drag position; it leaves on the next animation frame. */
  queueTarget(x: number, y: number, z: number): void {
    this.pendingTarget = [x, y, z];
  }

  /** Called once per animation frame: flush at most one target message. */
  flush(nowMs: number): void {
    if (this.pendingTarget === null) return;
    this.send({ type: "target", t: Math.round(nowMs), p: this.pendingTarget });
    this.pendingTarget = null;
  }

  toggleMode(): void {
    const current = this.model.frame?.mode ?? "FSC";
    this.send({ type: "mode", value: current === "FSC" ? "F" : "FSC" });
  }

  reset(): void {
    this.send({ type: "reset" });
  }

  setScale(scale: number, absolute?: boolean): void {
    this.send(
      absolute === undefined
        ? { type: "config", scale }
        : { type: "config", scale, absolute },
    );
  }
}
