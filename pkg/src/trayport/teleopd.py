"""Real-time teleoperation service.

One steering client drives the tray target over a WebSocket; any number of
observers receive the 50 Hz state frames.  The control loop owns all mutable
session state; network tasks only swap messages through a latest-wins mailbox
and bounded outbound queues (drop-oldest -- the loop never blocks on a slow
client).

Two clock modes:
  real time  -- the loop ticks every dt on the wall clock, consuming the most
                recent target (stale targets are held; the filter brings the
                tray smoothly to rest).
  lockstep   -- the loop runs exactly one cycle per received `target` message.
                This is the deterministic replay mode used to verify that the
                service reproduces the batch harness bit for bit; it exercises
                the identical controller path.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .harness import ExperimentConfig, config_from_dict
from .oracle import contact_wrench, zmp
from .orientation import exact_orientation_derivatives, friction_free_orientation
from .geom import axis_angle_to_rotation
from .sigproc import BiquadFilter, ChainDifferentiator, Differentiator, ReferenceState, filter_coeffs
from .smoother import N_DESIRED, TrajectorySmoother, continuous_blocks, discretize_zoh


@dataclass
class TeleopConfig:
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    scale: float = 2.0
    absolute_input: bool = False
    stale_after_s: float = 0.5

    @staticmethod
    def from_dict(doc: dict, base_dir: str = ".") -> "TeleopConfig":
        exp = config_from_dict({k: v for k, v in doc.items()
                                if k not in ("scale", "absolute_input", "stale_after_s")},
                               base_dir)
        return TeleopConfig(
            experiment=exp,
            scale=float(doc.get("scale", 2.0)),
            absolute_input=bool(doc.get("absolute_input", False)),
            stale_after_s=float(doc.get("stale_after_s", 0.5)),
        )


class Session:
    """Pure control-session state machine: messages in, frames out.

    Socket-free by design so the protocol behaviour is unit-testable; the
    server below owns the network plumbing.
    """

    def __init__(self, config: TeleopConfig):
        self.config = config
        exp = config.experiment
        self.dt = exp.dt
        self.mode = exp.mode
        self.manifest = exp.manifest
        self.offset_obj = exp.offset_object()
        self.scale = config.scale
        self.absolute = config.absolute_input

        self.filter = BiquadFilter(filter_coeffs(exp.filter_spec))
        self.diff = Differentiator(self.dt)
        self.chain_diff = ChainDifferentiator(self.dt, order=4)
        self.smoother = TrajectorySmoother(exp.smoother, self.offset_obj)
        k_ex = exp.smoother.k_track * np.eye(3)
        a_full, _ = continuous_blocks(k_ex)
        self._phi_ss, self._gamma_sd = discretize_zoh(
            a_full[N_DESIRED:, N_DESIRED:], a_full[N_DESIRED:, :N_DESIRED], self.dt
        )
        self._plant_f = np.zeros(9)  # F-mode plant state
        self.seq = 0
        self.target = np.zeros(3)
        self.target_time: float | None = None
        self._origin: np.ndarray | None = None
        self._anchor = np.zeros(3)
        self._pending_mode: str | None = None
        self.solve_stats: list[float] = []
        self.degraded_count = 0

    # -- message handling ------------------------------------------------------

    def handle_message(self, msg: dict) -> dict | None:
        """Apply one client message; returns an error reply or None."""
        if not isinstance(msg, dict) or "type" not in msg:
            return {"type": "error", "message": "message must be an object with a 'type'"}
        kind = msg["type"]
        if kind == "target":
            p = msg.get("p")
            if (not isinstance(p, (list, tuple))) or len(p) != 3:
                return {"type": "error", "message": "target needs p=[x,y,z]"}
            try:
                p = np.asarray([float(v) for v in p])
            except (TypeError, ValueError):
                return {"type": "error", "message": "target p must be numeric"}
            if not np.all(np.isfinite(p)):
                return {"type": "error", "message": "target p must be finite"}
            if self.absolute:
                self.target = p
            else:
                if self._origin is None:
                    self._origin = p.copy()
                    self._anchor = self.target.copy()
                self.target = self._anchor + self.scale * (p - self._origin)
            self.target_time = time.monotonic()
            return None
        if kind == "mode":
            value = msg.get("value")
            if value not in ("F", "FSC"):
                return {"type": "error", "message": "mode value must be 'F' or 'FSC'"}
            if value != self.mode:
                self._pending_mode = value
            return None
        if kind == "reset":
            self.reset()
            return None
        if kind == "config":
            if "scale" in msg:
                try:
                    scale = float(msg["scale"])
                except (TypeError, ValueError):
                    return {"type": "error", "message": "scale must be numeric"}
                if not (np.isfinite(scale) and scale > 0):
                    return {"type": "error", "message": "scale must be positive"}
                self.scale = scale
                self._origin = None  # re-anchor at the next target
            if "absolute" in msg:
                self.absolute = bool(msg["absolute"])
            return None
        return {"type": "error", "message": f"unknown message type {kind!r}"}

    def reset(self):
        self.filter.reset()
        self.diff.reset()
        self.chain_diff.reset()
        self.smoother.reset()
        self._plant_f[:] = 0.0
        self.target = np.zeros(3)
        self.target_time = None
        self._origin = None
        self._anchor = np.zeros(3)
        self._pending_mode = None

    # -- control cycle ------------------------------------------------------------

    def _apply_pending_mode(self):
        if self._pending_mode is None:
            return
        new = self._pending_mode
        self._pending_mode = None
        if new == self.mode:
            return
        if new == "FSC":
            # Seed the desired chain from the running plant: no output jump.
            pos, vel, acc = self._plant_f[0:3], self._plant_f[3:6], self._plant_f[6:9]
            self.smoother.seed_from_plant(pos, vel, acc)
            self.chain_diff.reset()
        else:
            self._plant_f = self.smoother.x[N_DESIRED:].copy()
            self.chain_diff.reset()
        self.mode = new

    def cycle(self) -> dict:
        """Advance one control period and build the telemetry frame."""
        self._apply_pending_mode()
        x_m = self.target
        x_r = self.filter.step(x_m)
        if self.mode == "FSC":
            v_r, a_r = self.diff.push(x_r)
            res = self.smoother.control_step(ReferenceState(x_r, v_r, a_r))
            tray = res.tray
            plant_pos = self.smoother.plant_pos.copy()
            solve_ms = res.solve_ms
            degraded = res.degraded
            bounds = {"omega_dot": res.omega_dot_max, "snap": res.snap_limit}
            self._plant_f = self.smoother.x[N_DESIRED:].copy()
        else:
            pos, vel, acc, jerk, snap = self.chain_diff.push(x_r)
            self.diff.push(x_r)
            x_d_vec = np.concatenate([pos, vel, acc, jerk, snap])
            self._plant_f = self._phi_ss @ self._plant_f + self._gamma_sd @ x_d_vec
            phi = friction_free_orientation(acc)
            omega, omega_dot = exact_orientation_derivatives(acc, jerk, snap)
            from .orientation import TrayState

            tray = TrayState(pos=pos, vel=vel, acc=acc, jerk=jerk, snap=snap,
                             phi=phi, omega=omega, omega_dot=omega_dot)
            # Keep the smoother plant mirror in sync for later mode switches.
            self.smoother.x[N_DESIRED:] = self._plant_f
            plant_pos = self._plant_f[0:3].copy()
            solve_ms = 0.0
            degraded = False
            bounds = {"omega_dot": None, "snap": None}
        if degraded:
            self.degraded_count += 1
        self.solve_stats.append(solve_ms)
        self.seq += 1
        return self._frame(tray, plant_pos, solve_ms, degraded, bounds)

    def _frame(self, tray, plant_pos, solve_ms, degraded, bounds) -> dict:
        rot = axis_angle_to_rotation(tray.phi)
        objects = []
        for spec in self.manifest:
            p_w = rot @ spec.com_offset()
            accel = tray.acc + np.cross(tray.omega_dot, p_w) + np.cross(
                tray.omega, np.cross(tray.omega, p_w)
            )
            f_tray, torque = contact_wrench(accel, rot, spec.inertia_diag(),
                                            tray.omega, tray.omega_dot)
            place = [float(spec.placement[0]), float(spec.placement[1])]
            if f_tray[2] <= 0.0:
                objects.append({"id": spec.id, "S": None, "B": None, "contact": False, "p": place})
                continue
            fn = float(np.linalg.norm(f_tray))
            s_val = float(np.arccos(min(1.0, abs(f_tray[2]) / fn)) / np.arctan(spec.mu))
            p_zero = zmp(f_tray, torque, spec.height)
            b_val = float(2.0 / spec.base_side * np.hypot(p_zero[0], p_zero[1]))
            objects.append({"id": spec.id, "S": s_val, "B": b_val, "contact": True, "p": place})
        stale = (
            self.target_time is not None
            and (time.monotonic() - self.target_time) > self.config.stale_after_s
        )
        return {
            "type": "frame",
            "seq": self.seq,
            "t": round(self.seq * self.dt, 9),
            "mode": self.mode,
            "tray": {
                "p": [float(v) for v in plant_pos],
                "phi_axis": [float(v) for v in tray.phi.axis],
                "phi_angle": float(tray.phi.angle),
            },
            "desired": {
                "x": [float(v) for v in tray.pos],
                "v": [float(v) for v in tray.vel],
                "a": [float(v) for v in tray.acc],
            },
            "objects": objects,
            "bounds": bounds,
            "solve_ms": float(solve_ms),
            "degraded": bool(degraded),
            "stale": bool(stale),
        }


class TeleopServer:
    """WebSocket host for one Session: steering arbitration, frame fan-out."""

    def __init__(self, config: TeleopConfig, lockstep: bool = False,
                 record_dir: str | None = None):
        self.session = Session(config)
        self.lockstep = lockstep
        self.record_dir = record_dir
        self._clients: dict = {}  # websocket -> asyncio.Queue
        self._steerer = None
        self._mailbox: asyncio.Queue = asyncio.Queue(maxsize=256)
        self._record_rows: list[str] = []
        self._stop = asyncio.Event()

    # -- network ------------------------------------------------------------------

    async def _sender(self, ws, queue: asyncio.Queue):
        try:
            while True:
                msg = await queue.get()
                await ws.send(msg)
        except Exception:
            pass

    async def _handler(self, ws):
        queue: asyncio.Queue = asyncio.Queue(maxsize=32)
        self._clients[ws] = queue
        sender = asyncio.create_task(self._sender(ws, queue))
        try:
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send(json.dumps({"type": "error", "message": "invalid JSON"}))
                    continue
                if self._steerer is None:
                    self._steerer = ws
                if ws is not self._steerer:
                    await ws.send(json.dumps({"type": "error", "message": "another client is steering"}))
                    continue
                await self._mailbox.put(msg)
        finally:
            sender.cancel()
            self._clients.pop(ws, None)
            if ws is self._steerer:
                self._steerer = None

    def _broadcast(self, frame: dict):
        payload = json.dumps(frame)
        for queue in self._clients.values():
            if queue.full():
                try:
                    queue.get_nowait()  # drop-oldest under backpressure
                except asyncio.QueueEmpty:
                    pass
            queue.put_nowait(payload)

    # -- control loop ----------------------------------------------------------------

    def _drain_mailbox(self) -> list[dict]:
        msgs = []
        while True:
            try:
                msgs.append(self._mailbox.get_nowait())
            except asyncio.QueueEmpty:
                return msgs

    def _record(self, frame_seq: int):
        x_m = self.session.target
        t = (frame_seq - 1) * self.session.dt
        self._record_rows.append(
            ",".join(f"{v:.17g}" for v in (t, x_m[0], x_m[1], x_m[2]))
        )

    async def _loop_realtime(self):
        session = self.session
        next_tick = time.monotonic()
        while not self._stop.is_set():
            for msg in self._drain_mailbox():
                reply = session.handle_message(msg)
                if reply is not None and self._steerer in self._clients:
                    self._clients[self._steerer].put_nowait(json.dumps(reply))
            frame = session.cycle()
            if self.record_dir:
                self._record(frame["seq"])
            self._broadcast(frame)
            next_tick += session.dt
            delay = next_tick - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_tick = time.monotonic()  # overrun: re-sync, never spiral

    async def _loop_lockstep(self):
        session = self.session
        while not self._stop.is_set():
            msg = await self._mailbox.get()
            reply = session.handle_message(msg)
            if reply is not None and self._steerer in self._clients:
                self._clients[self._steerer].put_nowait(json.dumps(reply))
            if msg.get("type") != "target":
                continue  # one cycle per target sample
            frame = session.cycle()
            if self.record_dir:
                self._record(frame["seq"])
            self._broadcast(frame)

    async def serve(self, host: str = "127.0.0.1", port: int = 0):
        import websockets

        loop = self._loop_lockstep() if self.lockstep else self._loop_realtime()
        async with websockets.serve(self._handler, host, port) as server:
            self.port = server.sockets[0].getsockname()[1]
            print(json.dumps({"listening": f"{host}:{self.port}"}), flush=True)
            task = asyncio.create_task(loop)
            try:
                await self._stop.wait()
            finally:
                task.cancel()
                self._flush_recording()

    def stop(self):
        self._stop.set()

    def _flush_recording(self):
        if not (self.record_dir and self._record_rows):
            return
        os.makedirs(self.record_dir, exist_ok=True)
        path = os.path.join(self.record_dir, "input.csv")
        with open(path, "w") as fh:
            fh.write("t,xm0,xm1,xm2\n")
            fh.write("\n".join(self._record_rows) + "\n")


def main(argv=None):
    ap = argparse.ArgumentParser(prog="teleopd", description="tray teleoperation service")
    ap.add_argument("--config", help="JSON config (harness schema + scale)", default=None)
    ap.add_argument("--bind", default="127.0.0.1:8765", help="addr:port")
    ap.add_argument("--record", default=None, help="directory for the replayable input trace")
    ap.add_argument("--lockstep", action="store_true", help="one cycle per target (replay mode)")
    args = ap.parse_args(argv)
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        config = TeleopConfig.from_dict(doc, base_dir=os.path.dirname(os.path.abspath(args.config)))
    else:
        config = TeleopConfig()
    host, _, port = args.bind.rpartition(":")
    try:
        port = int(port)
    except ValueError:
        raise ConfigurationError(f"--bind: invalid port in {args.bind!r}") from None
    server = TeleopServer(config, lockstep=args.lockstep, record_dir=args.record)

    async def run():
        await server.serve(host or "127.0.0.1", port)

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
