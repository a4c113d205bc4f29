/**
 * Cockpit entry: wires the canvas, drag handling, Z slider and buttons to the
 * teleop service. Drags steer the target in the XY plane; everything the user
 * sees comes from the received frames.
 */

import { UiSessionModel } from "./model.js";
import { render } from "./render.js";
import { CockpitClient } from "./socket.js";

const WORKSPACE_M = 0.9;

function setup(): void {
  const canvas = document.getElementById("cockpit") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2D canvas unavailable");
  const zSlider = document.getElementById("z-slider") as HTMLInputElement;
  const modeButton = document.getElementById("mode-toggle") as HTMLButtonElement;
  const resetButton = document.getElementById("reset") as HTMLButtonElement;

  const url =
    new URLSearchParams(window.location.search).get("ws") ?? "ws://127.0.0.1:8765";
  const model = new UiSessionModel();
  const client = new CockpitClient(url, model);
  client.connect();

  const toWorld = (ev: PointerEvent): [number, number] => {
    const rect = canvas.getBoundingClientRect();
    const size = Math.min(canvas.width * 0.55, canvas.height) - 20;
    const cx = 10 + size / 2;
    const cy = canvas.height / 2;
    const scale = size / (2 * WORKSPACE_M);
    const x = (ev.clientX - rect.left - cx) / scale;
    const y = -(ev.clientY - rect.top - cy) / scale;
    return [x, y];
  };

  canvas.addEventListener("pointerdown", (ev) => {
    model.target.dragging = true;
    const [x, y] = toWorld(ev);
    model.target.x = x;
    model.target.y = y;
    client.queueTarget(x, y, model.target.z);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!model.target.dragging) return;
    const [x, y] = toWorld(ev);
    model.target.x = x;
    model.target.y = y;
    client.queueTarget(x, y, model.target.z);
  });
  const endDrag = () => {
    model.target.dragging = false;
  };
  canvas.addEventListener("pointerup", endDrag);
  canvas.addEventListener("pointerleave", endDrag);

  zSlider.addEventListener("input", () => {
    model.target.z = Number(zSlider.value);
    client.queueTarget(model.target.x, model.target.y, model.target.z);
  });
  modeButton.addEventListener("click", () => client.toggleMode());
  resetButton.addEventListener("click", () => {
    model.target.x = 0;
    model.target.y = 0;
    model.target.z = 0;
    zSlider.value = "0";
    client.reset();
  });

  const loop = (nowMs: number) => {
    client.flush(nowMs); // at most one target message per animation frame
    render(ctx, model, { width: canvas.width, height: canvas.height });
    modeButton.textContent = `mode: ${model.frame?.mode ?? "-"}`;
    requestAnimationFrame(loop);
  };
  requestAnimationFrame(loop);
}

window.addEventListener("DOMContentLoaded", setup);
