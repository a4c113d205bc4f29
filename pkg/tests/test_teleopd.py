import asyncio
import json

import numpy as np
import pytest

from trayport.harness import ExperimentConfig, generate_input, run_control
from trayport.teleopd import Session, TeleopConfig, TeleopServer


def make_session(mode="FSC", scale=2.0, absolute=False, duration=1.0):
    cfg = TeleopConfig(
        experiment=ExperimentConfig(mode=mode, duration=duration),
        scale=scale,
        absolute_input=absolute,
    )
    return Session(cfg)


# -- message handling (socket-free) ------------------------------------------------


def test_malformed_messages_rejected_without_state_change():
    s = make_session()
    before = s.target.copy()
    assert s.handle_message({"nope": 1})["type"] == "error"
    assert s.handle_message({"type": "target"})["type"] == "error"
    assert s.handle_message({"type": "target", "p": [1, 2]})["type"] == "error"
    assert s.handle_message({"type": "target", "p": ["a", "b", "c"]})["type"] == "error"
    assert s.handle_message({"type": "mode", "value": "TURBO"})["type"] == "error"
    assert s.handle_message({"type": "config", "scale": -2})["type"] == "error"
    assert s.handle_message({"type": "wat"})["type"] == "error"
    assert np.array_equal(s.target, before)


def test_incremental_scaling_anchors_first_target():
    s = make_session(scale=2.0)
    assert s.handle_message({"type": "target", "t": 0, "p": [0.5, 0.0, 0.0]}) is None
    assert np.allclose(s.target, 0.0)  # first sample only anchors
    s.handle_message({"type": "target", "t": 20, "p": [0.6, 0.0, 0.0]})
    assert np.allclose(s.target, [0.2, 0.0, 0.0])  # 2 x 0.1 displacement


def test_absolute_mode_passthrough():
    s = make_session(absolute=True)
    s.handle_message({"type": "target", "t": 0, "p": [0.1, -0.2, 0.3]})
    assert np.allclose(s.target, [0.1, -0.2, 0.3])


def test_setpoint_response_converges():
    s = make_session(absolute=True)
    s.handle_message({"type": "target", "t": 0, "p": [0.1, 0.0, 0.0]})
    frame = None
    for _ in range(400):
        frame = s.cycle()
    assert frame["desired"]["x"][0] == pytest.approx(0.1, abs=0.02)
    assert frame["mode"] == "FSC"


def test_reset_rehomes():
    s = make_session(absolute=True)
    s.handle_message({"type": "target", "t": 0, "p": [0.05, 0.0, 0.0]})
    for _ in range(50):
        s.cycle()
    s.handle_message({"type": "reset"})
    frame = s.cycle()
    assert np.allclose(frame["desired"]["x"], 0.0, atol=1e-12)
    assert frame["tray"]["phi_angle"] == 0.0


def test_frames_carry_objects_and_bounds():
    s = make_session()
    frame = s.cycle()
    assert len(frame["objects"]) == 18
    ids = {o["id"] for o in frame["objects"]}
    assert "c3" in ids
    assert frame["bounds"]["omega_dot"] == pytest.approx(4.2519, abs=1e-3)
    assert frame["bounds"]["snap"] == pytest.approx(41.7115, abs=1e-3)
    for obj in frame["objects"]:
        assert obj["S"] == pytest.approx(0.0, abs=1e-9)
        assert obj["B"] == pytest.approx(0.0, abs=1e-9)


def test_mode_switch_at_cycle_boundary_keeps_snap_continuity():
    s = make_session(absolute=True)
    s.handle_message({"type": "target", "t": 0, "p": [0.08, 0.0, 0.0]})
    for _ in range(30):
        s.cycle()
    s.handle_message({"type": "mode", "value": "F"})
    for _ in range(30):
        frame = s.cycle()
    assert frame["mode"] == "F"
    s.handle_message({"type": "mode", "value": "FSC"})
    cfg = s.config.experiment.smoother
    prev_snap = None
    for _ in range(30):
        frame = s.cycle()
        snap = s.smoother.x[12:15].copy()
        if prev_snap is not None:
            assert np.all(np.abs(snap - prev_snap) <= cfg.bounds.u_max * cfg.dt + 1e-9)
        prev_snap = snap
    assert frame["mode"] == "FSC"


def test_frame_sequence_strictly_increases():
    s = make_session()
    seqs = [s.cycle()["seq"] for _ in range(20)]
    assert all(b == a + 1 for a, b in zip(seqs, seqs[1:]))


# -- live server ---------------------------------------------------------------------


async def _with_server(config, lockstep, fn):
    server = TeleopServer(config, lockstep=lockstep)
    task = asyncio.create_task(server.serve(port=0))
    try:
        while not hasattr(server, "port"):
            await asyncio.sleep(0.005)
        import websockets

        async with websockets.connect(f"ws://127.0.0.1:{server.port}") as ws:
            return await fn(server, ws)
    finally:
        server.stop()
        await asyncio.sleep(0.05)
        task.cancel()


def test_lockstep_replay_matches_batch_harness():
    # the service must reproduce the batch pipeline exactly on the same trace
    duration = 4.0
    exp = ExperimentConfig(mode="FSC", duration=duration, seed=42)
    batch = run_control(exp)
    t, x_m = generate_input(exp.input_params, exp.seed, exp.dt, duration)
    cfg = TeleopConfig(experiment=exp, scale=1.0, absolute_input=True)

    async def scenario(server, ws):
        desired = []
        solve_ms = []
        for k in range(len(t)):
            await ws.send(json.dumps({"type": "target", "t": k * 20, "p": list(x_m[k])}))
            frame = json.loads(await ws.recv())
            desired.append(frame["desired"]["x"])
            solve_ms.append(frame["solve_ms"])
        return np.array(desired), np.array(solve_ms)

    desired, solve_ms = asyncio.run(_with_server(cfg, True, scenario))
    assert desired.shape == batch.x_d.shape
    assert np.max(np.abs(desired - batch.x_d)) <= 1e-9


def test_realtime_loop_publishes_without_client_input():
    cfg = TeleopConfig(experiment=ExperimentConfig(mode="FSC", duration=1.0))

    async def scenario(server, ws):
        frames = [json.loads(await ws.recv()) for _ in range(10)]
        return frames

    frames = asyncio.run(_with_server(cfg, False, scenario))
    assert all(f["type"] == "frame" for f in frames)
    seqs = [f["seq"] for f in frames]
    assert all(b > a for a, b in zip(seqs, seqs[1:]))
    assert all(np.allclose(f["desired"]["x"], 0.0) for f in frames)


def test_second_client_is_observer_only():
    cfg = TeleopConfig(experiment=ExperimentConfig(mode="FSC", duration=1.0))

    async def scenario(server, ws):
        import websockets

        async with websockets.connect(f"ws://127.0.0.1:{server.port}") as ws2:
            await ws.send(json.dumps({"type": "target", "t": 0, "p": [0.01, 0, 0]}))
            await asyncio.sleep(0.05)
            await ws2.send(json.dumps({"type": "target", "t": 0, "p": [9.0, 9, 9]}))
            # ws2 must receive an error reply among its frames
            for _ in range(20):
                msg = json.loads(await ws2.recv())
                if msg["type"] == "error":
                    return msg
        return None

    msg = asyncio.run(_with_server(cfg, False, scenario))
    assert msg is not None and "steering" in msg["message"]
