"""Cross-module contract items: config loaders, the joint-space post-stage,
the offset-object dominance property, service backpressure and degraded-mode
behaviour, session recording."""

import asyncio
import json
import os

import numpy as np
import pytest

from trayport.errors import ValidationError
from trayport.harness import ExperimentConfig, generate_input, joint_trajectory, run_control
from trayport.ik import chain_from_config, fk
from trayport.oracle import evaluate_run
from trayport.smoother import SmootherConfig, TrajectorySmoother
from trayport.sigproc import ReferenceState
from trayport.teleopd import Session, TeleopConfig, TeleopServer
from trayport.vobject import ObjectSpec
import trayport as tp

from tests.test_ik import seven_dof


# -- chain config loader -------------------------------------------------------


def test_chain_from_config():
    doc = {
        "joints": [
            {"kind": "revolute", "axis": [0, 0, 1], "lower": -2.0, "upper": 2.0},
            {"kind": "prismatic", "axis": [1, 0, 0], "origin": [0, 0, 0.3],
             "lower": -0.5, "upper": 0.5},
        ],
        "tool": [0.1, 0, 0],
    }
    chain = chain_from_config(doc)
    assert chain.n == 2
    pos, _ = fk(chain, np.array([0.0, 0.2]))
    assert np.allclose(pos, [0.3, 0.0, 0.3])
    with pytest.raises(ValidationError, match=r"joints\[0\]"):
        chain_from_config({"joints": [{"kind": "revolute"}]})
    with pytest.raises(ValidationError):
        chain_from_config({"joints": []})


# -- joint-space post-stage ------------------------------------------------------


def test_joint_post_stage_tracks_task_trajectory():
    rec = run_control(ExperimentConfig(mode="FSC", duration=5.0, seed=1))
    chain = seven_dof()
    q, qdot = joint_trajectory(rec, chain)
    lo, hi = chain.limits()
    assert np.all(q > lo) and np.all(q < hi)
    assert np.max(np.abs(qdot)) <= 2.5 + 1e-12
    q0 = chain.midrange() + 0.25 * (hi - lo) * np.cos(np.arange(chain.n))
    base, _ = fk(chain, q0)
    errs = [
        np.linalg.norm(fk(chain, q[k])[0] - (base + rec.x_d[k]))
        for k in range(50, len(rec.t), 20)
    ]
    assert max(errs) < 0.1


# -- dominance of the offset object ------------------------------------------------


def test_offset_object_dominates_manifest():
    rec = run_control(ExperimentConfig(mode="FSC", duration=30.0, seed=42))
    rep = evaluate_run(rec.t, rec.acc, rec.phi_axis, rec.phi_angle,
                       rec.omega, rec.omega_dot, tp.table1_manifest())
    s_real = max(o.s_max for o in rep.objects)
    b_real = max(o.b_max for o in rep.objects)
    obj = tp.SIM_OFFSET_OBJECT
    r_xy = np.sqrt(obj.p_a_norm**2 - (obj.h / 2) ** 2)
    probes = [
        ObjectSpec(id=f"A{k}", base_side=obj.d, height=obj.h, mu=obj.mu,
                   placement=np.array([r_xy * np.cos(a), r_xy * np.sin(a), 0.0]))
        for k, a in enumerate(np.deg2rad(np.arange(0, 360, 45)))
    ]
    rep_a = evaluate_run(rec.t, rec.acc, rec.phi_axis, rec.phi_angle,
                         rec.omega, rec.omega_dot, probes)
    s_a = max(o.s_max for o in rep_a.objects)
    b_a = max(o.b_max for o in rep_a.objects)
    # truncation margin of the simplified force/torque expressions
    assert s_real <= 1.05 * s_a
    assert b_real <= 1.05 * b_a


# -- degraded-mode input box --------------------------------------------------------


def test_degraded_cycles_never_violate_input_box():
    # a 1-iteration solver cap forces iteration-cap statuses; held inputs must
    # stay inside the hard box and the loop must keep running
    cfg = SmootherConfig()
    sm = TrajectorySmoother(cfg, tp.SIM_OFFSET_OBJECT, max_iter=1)
    sm.reset()
    rng = np.random.default_rng(0)
    degraded_seen = 0
    for _ in range(80):
        ref = ReferenceState(rng.standard_normal(3) * 0.05, np.zeros(3), np.zeros(3))
        res = sm.control_step(ref)
        degraded_seen += int(res.degraded)
        assert np.all(np.abs(res.u) <= cfg.bounds.u_max + 1e-12)
    assert degraded_seen > 0
    assert sm.degraded_cycles == degraded_seen


# -- service backpressure and recording -----------------------------------------------


def test_broadcast_drops_oldest_under_backpressure():
    server = TeleopServer(TeleopConfig(experiment=ExperimentConfig(duration=1.0)))

    async def scenario():
        queue: asyncio.Queue = asyncio.Queue(maxsize=3)
        server._clients["fake"] = queue
        for seq in range(6):
            server._broadcast({"type": "frame", "seq": seq})
        kept = []
        while not queue.empty():
            kept.append(json.loads(queue.get_nowait())["seq"])
        return kept

    kept = asyncio.run(scenario())
    assert kept == [3, 4, 5]  # oldest dropped, newest kept, loop never blocked


def test_lockstep_recording_is_replayable(tmp_path):
    exp = ExperimentConfig(mode="FSC", duration=1.0, seed=9)
    t, x_m = generate_input(exp.input_params, exp.seed, exp.dt, exp.duration)
    server = TeleopServer(TeleopConfig(experiment=exp, scale=1.0, absolute_input=True),
                          lockstep=True, record_dir=str(tmp_path))

    async def scenario():
        task = asyncio.create_task(server.serve(port=0))
        while not hasattr(server, "port"):
            await asyncio.sleep(0.005)
        import websockets

        async with websockets.connect(f"ws://127.0.0.1:{server.port}") as ws:
            for k in range(len(t)):
                await ws.send(json.dumps({"type": "target", "t": k, "p": list(x_m[k])}))
                await ws.recv()
        server.stop()
        await asyncio.sleep(0.05)
        task.cancel()

    asyncio.run(scenario())
    recorded = np.loadtxt(tmp_path / "input.csv", delimiter=",", skiprows=1)
    assert np.allclose(recorded[:, 1:4], x_m, atol=1e-15)
    # replay through the batch harness: identical controller outputs
    replay = run_control(
        ExperimentConfig(mode="FSC", dt=exp.dt, input_trace=recorded[:, 1:4])
    )
    direct = run_control(exp)
    assert np.max(np.abs(replay.x_d - direct.x_d)) <= 1e-12


# -- optional long replica (full-duration) ------------------------------------------


@pytest.mark.skipif(not os.environ.get("TRAYPORT_LONG_RUN"),
                    reason="set TRAYPORT_LONG_RUN=1 for the 600 s replica")
def test_long_replica_stays_stable():
    res = tp.run_experiment(ExperimentConfig(mode="FSC", duration=600.0, seed=42))
    worst_s = max(o["s_max"] for o in res.summary["objects"].values())
    worst_b = max(o["b_max"] for o in res.summary["objects"].values())
    assert worst_s <= 1.0 and worst_b <= 1.0
    assert res.summary["audit"]["soft_ok"] and res.summary["audit"]["hard_ok"]
