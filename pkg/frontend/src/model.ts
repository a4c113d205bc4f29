/**
 * Client-side session state. Render state derives only from received frames
 * plus the local target widget -- the model never extrapolates physics and
 * never smooths the stability readings (gauges show frame values verbatim).
 */

import { Frame, parseFrame } from "./protocol.js";

export type ConnectionState = "connecting" | "open" | "closed";

export class RingBuffer {
  private data: number[] = [];
  constructor(readonly capacity: number) {}

  push(v: number): void {
    this.data.push(v);
    if (this.data.length > this.capacity) this.data.shift();
  }

  values(): readonly number[] {
    return this.data;
  }

  last(): number | undefined {
    return this.data[this.data.length - 1];
  }
}

export interface TargetWidget {
  x: number;
  y: number;
  z: number;
  dragging: boolean;
}

export class UiSessionModel {
  connection: ConnectionState = "connecting";
  frame: Frame | null = null;
  lastSeq = -1;
  droppedFrames = 0;
  staleFrames = 0;
  readonly solveHistory = new RingBuffer(150);
  readonly target: TargetWidget = { x: 0, y: 0, z: 0, dragging: false };
  reconnectAttempts = 0;

  /** Ingest one raw packet; true when it advanced the displayed frame. */
  ingest(raw: string): boolean {
    const frame = parseFrame(raw);
    if (frame === null) {
      this.droppedFrames += 1;
      return false;
    }
    if (frame.seq <= this.lastSeq) {
      this.staleFrames += 1;
      return false;
    }
    this.lastSeq = frame.seq;
    this.frame = frame;
    this.solveHistory.push(frame.solve_ms);
    return true;
  }

  /** Worst of S and B for an object, as displayed (no smoothing). */
  severity(id: string): number | null {
    const obj = this.frame?.objects.find((o) => o.id === id);
    if (!obj || obj.S === null || obj.B === null) return null;
    return Math.max(obj.S, obj.B);
  }

  tiltDegrees(): number {
    return this.frame ? (this.frame.tray.phi_angle * 180) / Math.PI : 0;
  }

  /**
   * In-plane direction the tray "pushes" toward (the acceleration the tilt
   * serves): the tilt axis rotated -90 degrees in the tray plane.
   */
  tiltDirection(): [number, number] {
    if (!this.frame || this.frame.tray.phi_angle === 0) return [0, 0];
    const axis = this.frame.tray.phi_axis;
    return [axis[1] ?? 0, -(axis[0] ?? 0)];
  }
}

/** Marker color by worst stability metric: calm, warning, violating. */
export function severityColor(severity: number | null): string {
  if (severity === null) return "#777777";
  if (severity < 0.7) return "#2faf5f";
  if (severity < 1.0) return "#e0a010";
  return "#d03030";
}
