"""Batch experiment runner: configuration, trajectory generation, F/FSC
execution, oracle evaluation and result emission.

Modes:
  F    filtering only -- the filtered operator input is the desired trajectory,
       orientation comes from backward-differenced accelerations.
  FSC  filtering + MPC smoothing with the offset-object dynamic constraints.

Both modes consume the identical input trace for a given seed and drive the
same simulated plant (the first-order tracking model).  White noise comes from
numpy's PCG64 generator seeded per run, so replays are byte-identical.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, ValidationError
from .geom import AxisAngle
from .oracle import StabilityReport, evaluate_run, write_metrics_csv
from .orientation import (
    GRAVITY,
    exact_orientation_derivatives,
    friction_free_orientation,
)
from .sigproc import BiquadFilter, ChainDifferentiator, Differentiator, ReferenceState, filter_coeffs
from .smoother import (
    N_DESIRED,
    SmootherConfig,
    StateBounds,
    TrajectorySmoother,
    continuous_blocks,
    discretize_zoh,
)
from .vobject import ObjectSpec, OffsetObject, TrayGeometry, angular_accel_bound, build_offset_object

# -- presets --------------------------------------------------------------------

#: Offset object used by the simulation experiments (fixed directly rather than
#: derived from the manifest).
SIM_OFFSET_OBJECT = OffsetObject(d=0.05, h=0.25, mu=0.15, p_a_norm=0.325)

TABLE1_OFFSETS = (0.1, 0.2, 0.3)
TABLE1_HEIGHTS = (0.05, 0.15, 0.25)
TABLE1_MUS = (0.15, 0.3)


def table1_manifest() -> list[ObjectSpec]:
    """The 18-block grid: square 50 mm base; offsets x friction x heights.

    Lower-case ids carry mu = 0.15, upper-case mu = 0.3; letter a/b/c encodes
    height 50/150/250 mm, the digit the offset ring.  Ring placements are a
    deterministic angular spread (positions do not appear in the parameter
    table; the constraints are placement-independent anyway).
    """
    specs = []
    for ring, offset in enumerate(TABLE1_OFFSETS):
        slot = 0
        for mu, case in ((0.15, "abc"), (0.3, "ABC")):
            for letter, height in zip(case, TABLE1_HEIGHTS):
                angle = np.deg2rad(60.0 * slot + 20.0 * ring)
                specs.append(
                    ObjectSpec(
                        id=f"{letter}{ring + 1}",
                        base_side=0.05,
                        height=height,
                        mu=mu,
                        placement=np.array([offset * np.cos(angle), offset * np.sin(angle), 0.0]),
                    )
                )
                slot += 1
    return specs


@dataclass(frozen=True)
class CosineNoiseParams:
    amplitudes: tuple = (0.3, 0.2, 0.1)
    periods: tuple = (5.0, 6.0, 7.0)
    noise_std: tuple = (0.01, 0.007, 0.0003)

    def __post_init__(self):
        if any(a <= 0 for a in self.amplitudes) or any(p <= 0 for p in self.periods):
            raise ValidationError("cosine amplitudes and periods must be positive")

    def clean(self, t):
        """Noise-free reference at times t: per axis A(1 - cos(2 pi / T t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.stack(
            [a * (1.0 - np.cos(2.0 * np.pi / p * t)) for a, p in zip(self.amplitudes, self.periods)],
            axis=-1,
        )
        return out


def generate_input(params: CosineNoiseParams, seed: int, dt: float, duration: float):
    """(t, x_m) input trace: clean cosine plus per-axis Gaussian noise (PCG64)."""
    n = int(round(duration / dt))
    t = np.arange(n) * dt
    rng = np.random.Generator(np.random.PCG64(seed))
    noise = rng.standard_normal((n, 3)) * np.asarray(params.noise_std)
    return t, params.clean(t) + noise


# -- configuration ----------------------------------------------------------------


@dataclass
class ExperimentConfig:
    mode: str = "FSC"
    duration: float = 60.0
    dt: float = 0.02
    seed: int = 42
    manifest: list[ObjectSpec] = field(default_factory=table1_manifest)
    tray: TrayGeometry = field(default_factory=TrayGeometry)
    offset_override: OffsetObject | None = SIM_OFFSET_OBJECT
    filter_spec: object = "sim"
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    input_params: CosineNoiseParams = field(default_factory=CosineNoiseParams)
    input_trace: np.ndarray | None = None  # overrides input_params when given
    ideal_tracking: bool = False
    out_dir: str | None = None

    def __post_init__(self):
        if self.mode not in ("F", "FSC"):
            raise ConfigurationError(f"mode: must be 'F' or 'FSC', got {self.mode!r}")
        if not self.duration > 0:
            raise ConfigurationError("duration: must be positive")
        if not self.dt > 0:
            raise ConfigurationError("dt: must be positive")
        if self.smoother.dt != self.dt:
            self.smoother = replace(self.smoother, dt=self.dt)

    def offset_object(self) -> OffsetObject:
        if self.offset_override is not None:
            return self.offset_override
        return build_offset_object(self.manifest, self.tray)


def config_from_dict(doc: dict, base_dir: str = ".") -> ExperimentConfig:
    """Build a config from a parsed JSON document, naming offending fields."""

    def err(path, msg):
        raise ConfigurationError(f"{path}: {msg}")

    kwargs = {}
    for key in ("mode", "seed"):
        if key in doc:
            kwargs[key] = doc[key]
    if "duration_s" in doc:
        kwargs["duration"] = float(doc["duration_s"])
    if "dt" in doc:
        kwargs["dt"] = float(doc["dt"])
    man = doc.get("manifest", "table1")
    if man == "table1":
        kwargs["manifest"] = table1_manifest()
    elif isinstance(man, list):
        specs = []
        for i, entry in enumerate(man):
            try:
                specs.append(
                    ObjectSpec(
                        id=str(entry["id"]),
                        base_side=float(entry["base_side"]),
                        height=float(entry["height"]),
                        mu=float(entry["mu"]),
                        placement=np.asarray(entry.get("placement", [0, 0, 0]), dtype=float),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                err(f"manifest[{i}]", str(exc))
        kwargs["manifest"] = specs
    else:
        err("manifest", f"expected 'table1' or a list, got {type(man).__name__}")
    if "tray" in doc:
        kwargs["tray"] = TrayGeometry(radius=float(doc["tray"].get("radius", 0.2)))
    off = doc.get("offset_object", "sim")
    if off == "sim":
        kwargs["offset_override"] = SIM_OFFSET_OBJECT
    elif off is None or off == "derive":
        kwargs["offset_override"] = None
    elif isinstance(off, dict):
        try:
            kwargs["offset_override"] = OffsetObject(
                d=float(off["d"]), h=float(off["h"]), mu=float(off["mu"]),
                p_a_norm=float(off["p_a_norm"]),
            )
        except (KeyError, ValueError) as exc:
            err("offset_object", str(exc))
    else:
        err("offset_object", "expected 'sim', 'derive', null or an object")
    if "filter" in doc:
        kwargs["filter_spec"] = doc["filter"]
        filter_coeffs(doc["filter"])  # validate early
    if "smoother" in doc:
        sm = doc["smoother"]
        bounds = StateBounds(
            v_max=float(sm.get("v_max", 1.5)),
            a_max=float(sm.get("a_max", 2.4)),
            j_max=float(sm.get("j_max", 50.0)),
            u_max=float(sm.get("u_max", 5e4)),
        )
        kwargs["smoother"] = SmootherConfig(
            dt=float(doc.get("dt", 0.02)),
            horizon=int(sm.get("horizon", 10)),
            k_track=float(sm.get("k_track", 20.0)),
            w_pos=float(sm.get("w_pos", 400.0)),
            w_vel=float(sm.get("w_vel", 40.0)),
            w_acc=float(sm.get("w_acc", 4.0)),
            w_input=float(sm.get("w_input", 1e-6)),
            bounds=bounds,
            slack_penalty=float(sm.get("slack_penalty", 1e6)),
        )
    inp = doc.get("input", {"type": "cosine_noise"})
    if inp.get("type", "cosine_noise") == "cosine_noise":
        kwargs["input_params"] = CosineNoiseParams(
            amplitudes=tuple(inp.get("amplitudes", (0.3, 0.2, 0.1))),
            periods=tuple(inp.get("periods", (5.0, 6.0, 7.0))),
            noise_std=tuple(inp.get("noise_std", (0.01, 0.007, 0.0003))),
        )
    elif inp["type"] == "csv":
        path = inp["path"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        kwargs["input_trace"] = data[:, 1:4]
    else:
        err("input.type", f"unknown input type {inp.get('type')!r}")
    if "ideal_tracking" in doc:
        kwargs["ideal_tracking"] = bool(doc["ideal_tracking"])
    if "out_dir" in doc:
        kwargs["out_dir"] = doc["out_dir"]
    return ExperimentConfig(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        doc = json.load(fh)
    return config_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))


# -- run records -----------------------------------------------------------------


@dataclass
class RunRecord:
    """Everything one control run produced, ready for the oracle and the audit."""

    config: ExperimentConfig
    t: np.ndarray  # sample times of the emitted tray states
    x_m: np.ndarray
    x_r: np.ndarray
    x_d: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    jerk: np.ndarray
    snap: np.ndarray
    phi_axis: np.ndarray
    phi_angle: np.ndarray
    omega: np.ndarray
    omega_dot: np.ndarray
    x_s: np.ndarray
    u: np.ndarray
    snap_limit: np.ndarray
    omega_dot_max: np.ndarray
    kkt: np.ndarray
    slack_max: np.ndarray
    degraded: np.ndarray
    solve_ms: np.ndarray
    iterations: np.ndarray


def _resolve_input(config: ExperimentConfig):
    if config.input_trace is not None:
        x_m = np.asarray(config.input_trace, dtype=float)
        t = np.arange(len(x_m)) * config.dt
        return t, x_m
    return generate_input(config.input_params, config.seed, config.dt, config.duration)


def _run_fsc(config: ExperimentConfig, t_in, x_m) -> RunRecord:
    n = len(t_in)
    filt = BiquadFilter(filter_coeffs(config.filter_spec))
    diff = Differentiator(config.dt)
    smoother = TrajectorySmoother(config.smoother, config.offset_object())
    smoother.reset()

    rec = {k: np.zeros((n, 3)) for k in
           ("x_r", "x_d", "vel", "acc", "jerk", "snap", "phi_axis", "omega", "omega_dot", "x_s", "u")}
    scal = {k: np.zeros(n) for k in
            ("phi_angle", "snap_limit", "omega_dot_max", "kkt", "slack_max", "solve_ms")}
    degraded = np.zeros(n, dtype=bool)
    iterations = np.zeros(n, dtype=int)

    for k in range(n):
        x_r = filt.step(x_m[k])
        v_r, a_r = diff.push(x_r)
        res = smoother.control_step(ReferenceState(x_r, v_r, a_r))
        tray = res.tray
        rec["x_r"][k] = x_r
        rec["x_d"][k] = tray.pos
        rec["vel"][k] = tray.vel
        rec["acc"][k] = tray.acc
        rec["jerk"][k] = tray.jerk
        rec["snap"][k] = tray.snap
        rec["phi_axis"][k] = tray.phi.axis
        rec["omega"][k] = tray.omega
        rec["omega_dot"][k] = tray.omega_dot
        rec["x_s"][k] = smoother.plant_pos
        rec["u"][k] = res.u
        scal["phi_angle"][k] = tray.phi.angle
        scal["snap_limit"][k] = res.snap_limit
        scal["omega_dot_max"][k] = res.omega_dot_max
        scal["kkt"][k] = res.kkt_residual
        scal["slack_max"][k] = res.slack_max
        scal["solve_ms"][k] = res.solve_ms
        degraded[k] = res.degraded
        iterations[k] = res.iterations

    return RunRecord(
        config=config, t=t_in + config.dt, x_m=x_m, degraded=degraded,
        iterations=iterations, **rec, **scal,
    )


def _run_f(config: ExperimentConfig, t_in, x_m) -> RunRecord:
    n = len(t_in)
    dt = config.dt
    filt = BiquadFilter(filter_coeffs(config.filter_spec))
    chain = ChainDifferentiator(dt, order=4)
    k_ex = config.smoother.k_track * np.eye(3)
    a_full, _ = continuous_blocks(k_ex)
    a_ss = a_full[N_DESIRED:, N_DESIRED:]
    a_sd = a_full[N_DESIRED:, :N_DESIRED]
    phi_ss, gamma_sd = discretize_zoh(a_ss, a_sd, dt)
    x_plant = np.zeros(9)

    rec = {k: np.zeros((n, 3)) for k in
           ("x_r", "x_d", "vel", "acc", "jerk", "snap", "phi_axis", "omega", "omega_dot", "x_s", "u")}
    scal = {k: np.full(n, np.nan) for k in
            ("phi_angle", "snap_limit", "omega_dot_max", "kkt", "slack_max", "solve_ms")}
    scal["phi_angle"] = np.zeros(n)
    degraded = np.zeros(n, dtype=bool)
    iterations = np.zeros(n, dtype=int)

    for k in range(n):
        x_r = filt.step(x_m[k])
        pos, vel, acc, jerk, snap = chain.push(x_r)
        x_d_vec = np.concatenate([pos, vel, acc, jerk, snap])
        x_plant = phi_ss @ x_plant + gamma_sd @ x_d_vec
        phi = friction_free_orientation(acc)
        omega, omega_dot = exact_orientation_derivatives(acc, jerk, snap)
        rec["x_r"][k] = x_r
        rec["x_d"][k] = pos
        rec["vel"][k] = vel
        rec["acc"][k] = acc
        rec["jerk"][k] = jerk
        rec["snap"][k] = snap
        rec["phi_axis"][k] = phi.axis
        rec["omega"][k] = omega
        rec["omega_dot"][k] = omega_dot
        rec["x_s"][k] = x_plant[0:3]
        scal["phi_angle"][k] = phi.angle
        degraded[k] = False

    return RunRecord(
        config=config, t=t_in + dt, x_m=x_m, degraded=degraded,
        iterations=iterations, **rec, **scal,
    )


def run_control(config: ExperimentConfig) -> RunRecord:
    """Execute the control pipeline only (no oracle pass, no files)."""
    t_in, x_m = _resolve_input(config)
    if config.mode == "FSC":
        return _run_fsc(config, t_in, x_m)
    return _run_f(config, t_in, x_m)


# -- audit -------------------------------------------------------------------------


def audit_run(rec: RunRecord) -> dict:
    """Post-hoc constraint audit of an FSC run against its own recorded bounds."""
    cfg = rec.config.smoother
    b = cfg.bounds
    tol = 1e-6
    out = {
        "u_max_violation": float(np.max(np.abs(rec.u)) - b.u_max),
        "vel_violation": float(np.max(np.abs(rec.vel)) - b.v_max),
        "acc_violation": float(np.max(np.abs(rec.acc)) - b.a_max),
        "jerk_violation": float(np.max(np.abs(rec.jerk)) - b.j_max),
    }
    per_axis = rec.snap_limit[:, None] / np.sqrt(3.0)
    out["snap_violation"] = float(np.max(np.abs(rec.snap) - per_axis))
    du = np.abs(np.diff(rec.snap, axis=0))
    out["snap_step_violation"] = float(np.max(du) - b.u_max * cfg.dt) if len(du) else 0.0
    out["max_kkt"] = float(np.nanmax(rec.kkt))
    out["max_slack"] = float(np.nanmax(rec.slack_max)) if np.any(np.isfinite(rec.slack_max)) else 0.0
    out["degraded_cycles"] = int(np.sum(rec.degraded))
    out["hard_ok"] = out["u_max_violation"] <= 1e-9
    out["soft_ok"] = all(out[k] <= tol for k in
                         ("vel_violation", "acc_violation", "jerk_violation", "snap_violation"))
    out["c4_ok"] = out["snap_step_violation"] <= 1e-9
    return out


# -- experiment entry point ----------------------------------------------------------


@dataclass
class RunResult:
    record: RunRecord
    report: StabilityReport
    summary: dict


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Full per-cycle pipeline + oracle pass + optional persistence."""
    wall0 = time.perf_counter()
    rec = run_control(config)
    x_s = rec.x_d if config.ideal_tracking else rec.x_s
    reference = config.input_params.clean if config.input_trace is None else rec.x_m
    report = evaluate_run(
        rec.t, rec.acc, rec.phi_axis, rec.phi_angle, rec.omega, rec.omega_dot,
        config.manifest, x_s=x_s, reference=reference,
    )
    solve = rec.solve_ms[np.isfinite(rec.solve_ms)]
    summary = {
        "mode": config.mode,
        "seed": config.seed,
        "duration_s": config.duration,
        "dt": config.dt,
        "objects": report.summary()["objects"],
        "e_bar": report.e_bar,
        "e_bar_raw": report.e_bar_raw,
        "delay_s": report.delay_s,
        "solve_ms": {
            "mean": float(np.mean(solve)) if solve.size else None,
            "p99": float(np.percentile(solve, 99)) if solve.size else None,
            "max": float(np.max(solve)) if solve.size else None,
        },
        "wall_s": time.perf_counter() - wall0,
    }
    if config.mode == "FSC":
        summary["audit"] = audit_run(rec)
    if config.out_dir:
        persist_run(config.out_dir, rec, report, summary)
    return RunResult(rec, report, summary)


# -- persistence ----------------------------------------------------------------------


def _fmt(v) -> str:
    return f"{v:.17g}"


def write_trajectory_csv(rec: RunRecord, path):
    cols3 = ("x_m", "x_r", "x_d", "phi_axis", "x_s", "vel", "acc", "jerk", "snap",
             "omega", "omega_dot", "u")
    header = ["t"]
    for c in cols3:
        header += [f"{c}{i}" for i in range(3)]
    header += ["phi_angle", "snap_limit", "omega_dot_max", "kkt", "slack_max", "degraded"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(len(rec.t)):
            row = [_fmt(rec.t[k])]
            for c in cols3:
                row += [_fmt(v) for v in getattr(rec, c)[k]]
            row += [
                _fmt(rec.phi_angle[k]), _fmt(rec.snap_limit[k]),
                _fmt(rec.omega_dot_max[k]), _fmt(rec.kkt[k]),
                _fmt(rec.slack_max[k]), str(int(rec.degraded[k])),
            ]
            fh.write(",".join(row) + "\n")


def write_input_csv(rec: RunRecord, path):
    """Input trace alone, replayable via config input.type = 'csv'."""
    with open(path, "w") as fh:
        fh.write("t,xm0,xm1,xm2\n")
        for k in range(len(rec.t)):
            fh.write(",".join([_fmt(rec.t[k] - rec.config.dt)] + [_fmt(v) for v in rec.x_m[k]]) + "\n")


def persist_run(out_dir, rec: RunRecord, report: StabilityReport, summary: dict):
    os.makedirs(out_dir, exist_ok=True)
    write_trajectory_csv(rec, os.path.join(out_dir, "trajectory.csv"))
    write_metrics_csv(report, os.path.join(out_dir, "metrics.csv"))
    write_input_csv(rec, os.path.join(out_dir, "input.csv"))
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- sweep + certify -------------------------------------------------------------------

COMPASS = tuple(np.deg2rad(a) for a in range(0, 360, 45))


def sweep_table1(config: ExperimentConfig | None = None) -> dict:
    """Stability sweep over the block grid: run one FSC trajectory, evaluate
    every grid cell at its worst compass placement (direction-independent
    maxima)."""
    config = config or ExperimentConfig()
    rec = run_control(config)
    cells = {}
    for offset in TABLE1_OFFSETS:
        for mu in TABLE1_MUS:
            for height in TABLE1_HEIGHTS:
                probes = [
                    ObjectSpec(
                        id=f"p{int(np.rad2deg(a))}",
                        base_side=0.05, height=height, mu=mu,
                        placement=np.array([offset * np.cos(a), offset * np.sin(a), 0.0]),
                    )
                    for a in COMPASS
                ]
                rep = evaluate_run(rec.t, rec.acc, rec.phi_axis, rec.phi_angle,
                                   rec.omega, rec.omega_dot, probes)
                cells[(offset, mu, height)] = (
                    max(o.s_max for o in rep.objects),
                    max(o.b_max for o in rep.objects),
                )
    return cells


def check_sweep_monotonicity(cells: dict, slack: float = 1e-6) -> list[str]:
    """Violations of the three observed orderings (empty list = all hold)."""
    bad = []
    for mu in TABLE1_MUS:
        for h in TABLE1_HEIGHTS:
            s = [cells[(o, mu, h)][0] for o in TABLE1_OFFSETS]
            if any(s[i + 1] < s[i] - slack for i in range(len(s) - 1)):
                bad.append(f"S_max not non-decreasing in offset at mu={mu}, h={h}: {s}")
    for o in TABLE1_OFFSETS:
        for h in TABLE1_HEIGHTS:
            s = [cells[(o, mu, h)][0] for mu in sorted(TABLE1_MUS)]
            if any(s[i + 1] > s[i] + slack for i in range(len(s) - 1)):
                bad.append(f"S_max not non-increasing in mu at offset={o}, h={h}: {s}")
    for o in TABLE1_OFFSETS:
        for mu in TABLE1_MUS:
            b = [cells[(o, mu, h)][1] for h in TABLE1_HEIGHTS]
            if any(b[i + 1] < b[i] - slack for i in range(len(b) - 1)):
                bad.append(f"B_max not non-decreasing in height at offset={o}, mu={mu}: {b}")
    return bad


def joint_trajectory(rec: RunRecord, chain, gains=None, q0=None,
                     damping: float = 0.05, qdot_max: float = 2.5):
    """Post-stage: map a recorded task trajectory to joint space.

    Integrates the differential IK at the control rate against the recorded
    desired pose (position plus tray tilt applied on top of the mount
    orientation) and twist.  Joint velocities are clipped at ``qdot_max``
    (actuator slew); returns (q, qdot) traces.  Purely a consumer of the
    record -- the stability metrics upstream never depend on it.
    """
    from .geom import AxisAngle, axis_angle_to_rotation
    from .ik import IkGains, fk, ik_step

    gains = gains or IkGains()
    n = len(rec.t)
    q = np.zeros((n, chain.n))
    qdot = np.zeros((n, chain.n))
    if q0 is None:
        # generic elbow-bent posture: away from limits and from the
        # straight-arm singularity
        lo, hi = chain.limits()
        q_cur = chain.midrange() + 0.25 * (hi - lo) * np.cos(np.arange(chain.n))
    else:
        q_cur = np.asarray(q0, dtype=float).copy()
    base_pos, base_rot = fk(chain, q_cur)
    dt = rec.config.dt
    for k in range(n):
        pos_d = base_pos + rec.x_d[k]
        rot_d = axis_angle_to_rotation(AxisAngle(rec.phi_axis[k], rec.phi_angle[k])) @ base_rot
        twist = np.concatenate([rec.vel[k], rec.omega[k]])
        dq = ik_step(chain, gains, q_cur, pos_d, rot_d, twist, damping=damping)
        dq = np.clip(dq, -qdot_max, qdot_max)
        q_cur = q_cur + dt * dq
        q[k] = q_cur
        qdot[k] = dq
    return q, qdot


def certify_trajectory(trajectory_csv: str, manifest: list[ObjectSpec],
                       offset_obj: OffsetObject) -> dict:
    """Audit a recorded trajectory: bound compliance + oracle metrics <= 1."""
    data = np.genfromtxt(trajectory_csv, delimiter=",", names=True)
    t = data["t"]
    get3 = lambda c: np.stack([data[f"{c}{i}"] for i in range(3)], axis=1)
    acc, phi_axis = get3("acc"), get3("phi_axis")
    omega, omega_dot = get3("omega"), get3("omega_dot")
    report = evaluate_run(t, acc, phi_axis, data["phi_angle"], omega, omega_dot, manifest)
    bounds = np.array([angular_accel_bound(offset_obj, a, GRAVITY) for a in acc])
    ratio = np.linalg.norm(omega_dot, axis=1) / bounds
    s_max = max(o.s_max for o in report.objects)
    b_max = max(o.b_max for o in report.objects)
    return {
        "samples": len(t),
        "max_omega_dot_ratio": float(np.max(ratio)),
        "s_max": float(s_max),
        "b_max": float(b_max),
        "stable": bool(s_max <= 1.0 and b_max <= 1.0),
        "contact_lost": any(o.contact_lost for o in report.objects),
    }
