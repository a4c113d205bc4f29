/**
 * 2.5D cockpit rendering: top view with object markers and the drag target,
 * a tilt glyph plus side elevation, per-object S/B bar gauges with the red
 * line at 1.0, and a solve-time sparkline. Pure function of the model over a
 * minimal 2D-context interface, so it runs against a mock in tests.
 */

import { severityColor, UiSessionModel } from "./model.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: string;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
}

export interface Layout {
  width: number;
  height: number;
}

const TRAY_RADIUS_M = 0.2;
const WORKSPACE_M = 0.9; // half-width of the top view in meters

export function worldToTop(
  x: number,
  y: number,
  layout: Layout,
): [number, number] {
  const size = Math.min(layout.width * 0.55, layout.height) - 20;
  const cx = 10 + size / 2;
  const cy = layout.height / 2;
  const scale = size / (2 * WORKSPACE_M);
  return [cx + x * scale, cy - y * scale];
}

function drawTopView(ctx: Ctx2D, model: UiSessionModel, layout: Layout): void {
  const frame = model.frame;
  const size = Math.min(layout.width * 0.55, layout.height) - 20;
  const scale = size / (2 * WORKSPACE_M);
  const [cx, cy] = worldToTop(0, 0, layout);

  ctx.strokeStyle = "#3a3f4a";
  ctx.strokeRect(cx - size / 2, cy - size / 2, size, size);

  const trayX = frame ? frame.tray.p[0] ?? 0 : 0;
  const trayY = frame ? frame.tray.p[1] ?? 0 : 0;
  const [tx, ty] = worldToTop(trayX, trayY, layout);
  ctx.beginPath();
  ctx.arc(tx, ty, TRAY_RADIUS_M * scale, 0, 2 * Math.PI);
  ctx.fillStyle = "#262b33";
  ctx.fill();
  ctx.strokeStyle = "#8892a4";
  ctx.stroke();

  // tilt glyph: arrow from the tray center along the tilt (push) direction
  const [dx, dy] = model.tiltDirection();
  const mag = model.frame ? model.frame.tray.phi_angle : 0;
  if (mag > 1e-6) {
    const len = Math.min(mag / 0.26, 1.0) * TRAY_RADIUS_M * scale;
    ctx.beginPath();
    ctx.moveTo(tx, ty);
    ctx.lineTo(tx + dx * len, ty - dy * len);
    ctx.strokeStyle = "#62b0ff";
    ctx.lineWidth = 3;
    ctx.stroke();
    ctx.lineWidth = 1;
  }

  // objects at their tray placements, colored by their worst metric
  if (frame) {
    frame.objects.forEach((obj, i) => {
      const sev = obj.S !== null && obj.B !== null ? Math.max(obj.S, obj.B) : null;
      // fall back to a ring layout when the server omits placements
      const ring = 0.12 + 0.05 * (i % 3);
      const angle = (2 * Math.PI * i) / Math.max(frame.objects.length, 1);
      const px = obj.p?.[0] ?? ring * Math.cos(angle);
      const py = obj.p?.[1] ?? ring * Math.sin(angle);
      ctx.fillStyle = severityColor(sev);
      ctx.beginPath();
      ctx.arc(tx + px * scale, ty - py * scale, 5, 0, 2 * Math.PI);
      ctx.fill();
    });
  }

  // drag target widget
  const [wx, wy] = worldToTop(model.target.x, model.target.y, layout);
  ctx.strokeStyle = model.target.dragging ? "#ffd24a" : "#c0c6d4";
  ctx.beginPath();
  ctx.arc(wx, wy, 6, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(wx - 9, wy);
  ctx.lineTo(wx + 9, wy);
  ctx.moveTo(wx, wy - 9);
  ctx.lineTo(wx, wy + 9);
  ctx.stroke();
}

function drawSideElevation(ctx: Ctx2D, model: UiSessionModel, layout: Layout): void {
  const x0 = layout.width * 0.58;
  const w = layout.width * 0.18;
  const y0 = 30;
  const h = 90;
  ctx.strokeStyle = "#3a3f4a";
  ctx.strokeRect(x0, y0, w, h);
  const frame = model.frame;
  const z = frame ? frame.tray.p[2] ?? 0 : 0;
  const cy = y0 + h * (0.75 - Math.max(-0.3, Math.min(z, 0.3)));
  const tilt = frame ? frame.tray.phi_angle : 0;
  const half = w * 0.35;
  ctx.beginPath();
  ctx.moveTo(x0 + w / 2 - half, cy + half * Math.sin(tilt));
  ctx.lineTo(x0 + w / 2 + half, cy - half * Math.sin(tilt));
  ctx.strokeStyle = "#8892a4";
  ctx.lineWidth = 3;
  ctx.stroke();
  ctx.lineWidth = 1;
  ctx.fillStyle = "#c0c6d4";
  ctx.font = "12px monospace";
  ctx.textAlign = "left";
  ctx.fillText(`tilt ${model.tiltDegrees().toFixed(2)} deg`, x0, y0 + h + 16);
  ctx.fillText(`z ${z.toFixed(3)} m`, x0, y0 + h + 32);
}

function drawGauges(ctx: Ctx2D, model: UiSessionModel, layout: Layout): void {
  const frame = model.frame;
  if (!frame) return;
  const x0 = layout.width * 0.58;
  const w = layout.width * 0.4;
  let y = 170;
  const rowH = 12;
  const barMax = 1.5; // gauge full scale; the red line sits at 1.0
  const redX = x0 + (w * 1.0) / barMax;
  ctx.font = "10px monospace";
  for (const obj of frame.objects) {
    for (const [metric, value] of [["S", obj.S], ["B", obj.B]] as const) {
      const v = value === null ? 0 : Math.min(value, barMax);
      ctx.fillStyle = value === null ? "#555" : severityColor(value);
      ctx.fillRect(x0, y, (w * v) / barMax, rowH - 3);
      ctx.fillStyle = "#c0c6d4";
      ctx.textAlign = "left";
      ctx.fillText(`${obj.id}.${metric}`, x0 - 46, y + rowH - 4);
      y += rowH;
    }
  }
  ctx.strokeStyle = "#d03030";
  ctx.beginPath();
  ctx.moveTo(redX, 166);
  ctx.lineTo(redX, y);
  ctx.stroke();
}

function drawSparkline(ctx: Ctx2D, model: UiSessionModel, layout: Layout): void {
  const x0 = layout.width * 0.58;
  const w = layout.width * 0.38;
  const y0 = layout.height - 46;
  const h = 30;
  ctx.strokeStyle = "#3a3f4a";
  ctx.strokeRect(x0, y0, w, h);
  const values = model.solveHistory.values();
  if (values.length > 1) {
    const vmax = Math.max(10, ...values);
    ctx.beginPath();
    values.forEach((v, i) => {
      const px = x0 + (w * i) / (model.solveHistory.capacity - 1);
      const py = y0 + h - (h * v) / vmax;
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.strokeStyle = "#62b0ff";
    ctx.stroke();
  }
  ctx.fillStyle = "#c0c6d4";
  ctx.font = "11px monospace";
  ctx.textAlign = "left";
  const last = model.solveHistory.last();
  ctx.fillText(`solve ${last === undefined ? "-" : last.toFixed(1)} ms`, x0, y0 - 6);
}

export function render(ctx: Ctx2D, model: UiSessionModel, layout: Layout): void {
  ctx.clearRect(0, 0, layout.width, layout.height);
  ctx.fillStyle = model.connection === "open" ? "#161a20" : "#201616";
  ctx.fillRect(0, 0, layout.width, layout.height);
  drawTopView(ctx, model, layout);
  drawSideElevation(ctx, model, layout);
  drawGauges(ctx, model, layout);
  drawSparkline(ctx, model, layout);
  ctx.fillStyle = "#c0c6d4";
  ctx.font = "12px monospace";
  ctx.textAlign = "left";
  const frame = model.frame;
  const status =
    model.connection === "open"
      ? `mode ${frame?.mode ?? "-"}  seq ${frame?.seq ?? "-"}${frame?.degraded ? "  DEGRADED" : ""}`
      : `${model.connection}  (retry ${model.reconnectAttempts})`;
  ctx.fillText(status, 12, 18);
}
