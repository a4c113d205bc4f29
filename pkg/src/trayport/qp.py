"""Dense convex QP solver: primal active set with a Cholesky-factored Hessian.

Solves  min 1/2 z'Hz + f'z  s.t.  A_in z <= b_in  for small dense problems
(tens to a few hundred variables), the regime of the per-cycle MPC programs.
Warm starts accept the previous solution plus its active set.  The returned
``kkt_residual`` is measured against the *original* H (the 1e-9 ridge used for
factorization is removed again by iterative refinement at the end), so a
``converged`` status certifies stationarity, feasibility, complementarity and
dual sign at 1e-6 or better.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, qr

REGULARIZATION = 1e-9
FEAS_TOL = 1e-9
DUAL_TOL = 1e-9
KKT_TOL = 1e-6


@dataclass
class QpProblem:
    """min 1/2 z'Hz + f'z  s.t.  A_in z <= b_in.  H symmetric PSD."""

    H: np.ndarray
    f: np.ndarray
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.f = np.asarray(self.f, dtype=float).ravel()
        n = self.f.size
        if self.A_in is None:
            self.A_in = np.zeros((0, n))
            self.b_in = np.zeros(0)
        else:
            self.A_in = np.asarray(self.A_in, dtype=float).reshape(-1, n)
            self.b_in = np.asarray(self.b_in, dtype=float).ravel()
        scale = max(1.0, float(np.abs(self.H).max(initial=0.0)))
        if float(np.abs(self.H - self.H.T).max(initial=0.0)) > 1e-12 * scale:
            raise ValueError("H must be symmetric")


@dataclass
class QpSolution:
    z: np.ndarray
    status: str  # "converged" | "iteration-cap" | "numeric-failure"
    kkt_residual: float
    iterations: int
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = np.nan
    working_set: list[int] = field(default_factory=list)


class ActiveSetQP:
    """Primal active-set solver instance (owns scratch state; one per loop)."""

    def __init__(self, max_iter: int = 200):
        self.max_iter = max_iter
        self.trace = None  # set to a list to record per-iteration objectives
        self._h_cache = None  # (H_ref, H_reg, chol): H is reused verbatim every cycle

    # -- public API ---------------------------------------------------------

    def solve(self, p: QpProblem, warm=None) -> QpSolution:
        """Solve ``p``; ``warm`` is an optional z or (z, working_set) pair.

        A warm point is repaired to feasibility if needed (phase-1 on the max
        violation); an infeasible problem surfaces as ``numeric-failure``.
        Internally the variables are Jacobi-equilibrated (z' = z / d with
        d = sqrt(diag H)) so wildly mixed cost scales -- soft-constraint
        penalties against near-zero input weights -- do not poison the KKT
        accuracy; multipliers are scale-invariant.
        """
        n = p.f.size
        # Per-cycle MPC problems reuse the same H and A_in arrays verbatim, so
        # the equilibration and factorization are cached on their identity;
        # holding strong references makes the `is` test sound.  Callers must
        # not mutate H or A_in in place between solves.
        cache = self._h_cache
        if cache is not None and cache[0] is p.H and cache[1] is p.A_in:
            _, _, d, hs, a_s, H, chol = cache
        else:
            diag = np.diag(p.H).copy()
            floor = max(float(diag.max(initial=0.0)) * 1e-14, REGULARIZATION)
            d = 1.0 / np.sqrt(np.maximum(diag, floor))
            hs = (p.H * d).T * d
            hs = 0.5 * (hs + hs.T)
            a_s = p.A_in * d[None, :]
            H = hs + REGULARIZATION * np.eye(n)
            try:
                chol = cho_factor(H, lower=True, check_finite=False)
            except np.linalg.LinAlgError:
                return QpSolution(np.zeros(n), "numeric-failure", np.inf, 0)
            self._h_cache = (p.H, p.A_in, d, hs, a_s, H, chol)
        ps = QpProblem(hs, p.f * d, a_s, p.b_in)

        z0, ws0 = self._unpack_warm(warm, n)
        attempts = [(z0, ws0)]
        if warm is not None:
            # Warm starts are an optimization, never load-bearing: if the warm
            # path fails to certify, retry once from scratch.
            attempts.append((np.zeros(n), []))
        sol = None
        for z_a, ws_a in attempts:
            z0s, ok = self._feasible_start(ps, z_a / d)
            if not ok:
                sol = QpSolution(z_a, "numeric-failure", np.inf, 0)
                continue
            sol = self._iterate(ps, H, chol, z0s, ws_a)
            sol.z = sol.z * d
            sol.kkt_residual = self._kkt_residual(p, sol.z, sol.lam)
            if sol.status == "converged" and sol.kkt_residual > KKT_TOL:
                sol.status = "numeric-failure"
            if sol.status == "converged":
                break
        sol.objective = float(0.5 * sol.z @ p.H @ sol.z + p.f @ sol.z)
        return sol

    # -- internals ----------------------------------------------------------

    @staticmethod
    def _unpack_warm(warm, n):
        if warm is None:
            return np.zeros(n), []
        if isinstance(warm, tuple):
            z0, ws = warm
            return np.asarray(z0, dtype=float).copy(), list(ws)
        return np.asarray(warm, dtype=float).copy(), []

    def _feasible_start(self, p: QpProblem, z0: np.ndarray):
        if p.A_in.shape[0] == 0:
            return z0, True
        viol = float(np.max(p.A_in @ z0 - p.b_in, initial=-np.inf))
        if viol <= FEAS_TOL:
            return z0, True
        # Phase 1, proximal-point form: repeat  min 1/2 t^2 + mu/2 ||z - z_c||^2
        # s.t. A z - t <= b, t >= 0  with the pull center z_c moved to each
        # round's solution.  Every round is a well-conditioned strictly convex
        # QP, and on polyhedra the iteration reaches max-violation 0 in
        # finitely many rounds when a feasible point exists.  Rows are
        # normalized so t measures violation in unit-row coordinates.
        n = p.f.size
        mu = 1e-3
        norms = np.maximum(np.linalg.norm(p.A_in, axis=1), 1e-12)
        a_n = p.A_in / norms[:, None]
        b_n = p.b_in / norms
        m = a_n.shape[0]
        h1 = np.eye(n + 1) * mu
        h1[n, n] = 1.0
        A1 = np.zeros((m + 1, n + 1))
        A1[:m, :n] = a_n
        A1[:m, n] = -1.0
        A1[m, n] = -1.0
        b1 = np.concatenate([b_n, [0.0]])
        chol1 = cho_factor(h1 + REGULARIZATION * np.eye(n + 1), lower=True, check_finite=False)
        z_c = z0.copy()
        t_prev = np.inf
        for _ in range(100):
            f1 = np.concatenate([-mu * z_c, [0.0]])
            p1 = QpProblem(h1, f1, A1, b1)
            viol_n = float(np.max(a_n @ z_c - b_n, initial=0.0))
            start = np.concatenate([z_c, [max(viol_n, 0.0) + 1.0]])
            sol1 = self._iterate(p1, p1.H + REGULARIZATION * np.eye(n + 1), chol1, start, [])
            z_c = self._polish_feasibility(p, sol1.z[:n])
            # The realized violation of the returned point is what matters (the
            # ratio test tolerates boundary-level residuals), not t itself.
            if float(np.max(p.A_in @ z_c - p.b_in, initial=0.0)) <= 1e-9:
                return z_c, True
            t_now = float(sol1.z[n])
            if not t_now < t_prev * (1.0 - 1e-3):
                break  # stagnating: no feasible point reachable
            t_prev = t_now
        return z0, False

    @staticmethod
    def _polish_feasibility(p: QpProblem, z: np.ndarray) -> np.ndarray:
        """Least-norm correction of residual micro-violations (solver drift on
        rows that left the working set mid-iteration)."""
        for _ in range(3):
            viol = p.A_in @ z - p.b_in
            bad = viol > 0.0
            if not np.any(bad) or float(viol.max()) > 1e-4:
                break  # clean, or too far gone for a linearized nudge
            delta, *_ = np.linalg.lstsq(p.A_in[bad], viol[bad], rcond=None)
            z = z - delta
        return z

    def _iterate(self, p: QpProblem, H, chol, z, ws0) -> QpSolution:
        A, b, f = p.A_in, p.b_in, p.f
        m = A.shape[0]
        a_z = A @ z if m else np.zeros(0)
        work = self._independent_active_set(A, b, a_z, ws0)
        iters = 0
        status = "iteration-cap"
        lam_w = np.zeros(0)
        in_work = np.zeros(m, dtype=bool)
        in_work[work] = True

        while iters < self.max_iter:
            iters += 1
            g = H @ z + f
            obj = 0.5 * float(z @ g) + 0.5 * float(f @ z)
            if self.trace is not None:
                self.trace.append(obj)
            if work:
                aw_t = A[work].T  # n x mw
                x = cho_solve(chol, aw_t, check_finite=False)
                s_mat = aw_t.T @ x
                try:
                    s_chol = cho_factor(s_mat + 1e-14 * np.eye(len(work)), lower=True, check_finite=False)
                except np.linalg.LinAlgError:
                    dropped = work.pop()
                    in_work[dropped] = False
                    continue
                lam_w = cho_solve(s_chol, -(x.T @ g), check_finite=False)
                step = -cho_solve(chol, g, check_finite=False) - x @ lam_w
            else:
                lam_w = np.zeros(0)
                step = -cho_solve(chol, g, check_finite=False)

            # Stationary when the step is negligible *or* its predicted
            # objective decrease is at rounding level -- that second test is
            # what terminates cleanly when poor conditioning amplifies solve
            # roundoff into visible steps.  The curvature form p'Hp is used
            # rather than -g'p: the latter inherits lambda-scaled roundoff
            # from the Schur solve and can fake progress forever.
            step_scale = np.max(np.abs(step), initial=0.0) / max(1.0, float(np.max(np.abs(z), initial=0.0)))
            descent = float(step @ (H @ step))
            if step_scale <= 1e-9 or descent <= 1e-13 * max(1.0, abs(obj)):
                if lam_w.size == 0 or float(np.min(lam_w)) >= -DUAL_TOL:
                    status = "converged"
                    break
                dropped = work.pop(int(np.argmin(lam_w)))
                in_work[dropped] = False
                continue

            # Ratio test over rows outside the working set.
            alpha, blocker = 1.0, -1
            if m:
                a_p = A @ step
                a_z = A @ z
                cand = (~in_work) & (a_p > 1e-12)
                if np.any(cand):
                    idx = np.flatnonzero(cand)
                    resid = np.maximum(b[idx] - a_z[idx], 0.0)
                    ratios = resid / a_p[idx]
                    k = int(np.argmin(ratios))  # first minimum = lowest row index
                    if ratios[k] < alpha - 1e-15:
                        alpha, blocker = float(ratios[k]), int(idx[k])
                z = z + alpha * step
            else:
                z = z + step
            if blocker >= 0:
                work.append(blocker)
                in_work[blocker] = True

        lam = np.zeros(m)
        if work and lam_w.size == len(work):
            lam[work] = lam_w
        z, lam = self._refine(p, chol, z, lam, work)
        kkt = self._kkt_residual(p, z, lam)
        obj = float(0.5 * z @ p.H @ z + p.f @ z)
        return QpSolution(z, status, kkt, iters, lam, obj, list(work))

    @staticmethod
    def _independent_active_set(A, b, a_z, candidates):
        """Candidate rows active at z with linearly independent normals."""
        cand = [i for i in dict.fromkeys(candidates)
                if 0 <= i < A.shape[0] and abs(a_z[i] - b[i]) <= 1e-7]
        if not cand:
            return []
        if len(cand) == 1:
            return cand if np.linalg.norm(A[cand[0]]) > 1e-12 else []
        # Rank-revealing QR keeps a well-conditioned independent subset.
        _, r, piv = qr(A[cand].T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        keep = diag > 1e-10 * max(1.0, diag[0])
        return sorted(cand[piv[j]] for j in range(len(cand)) if j < len(diag) and keep[j])

    def _refine(self, p: QpProblem, chol, z, lam, work):
        """Refinement passes of the optimal-face KKT system against the
        original (unregularized) H: removes the factorization ridge from the
        residual and digs the mixed-scale stationarity error down to ~1e-10."""
        A, b, f = p.A_in, p.b_in, p.f
        for _ in range(4):
            if work:
                aw = A[work]
                r1 = -(p.H @ z + f + aw.T @ lam[work])
                r2 = b[work] - aw @ z
                x = cho_solve(chol, aw.T, check_finite=False)
                s_mat = aw @ x
                try:
                    s_chol = cho_factor(s_mat + 1e-14 * np.eye(len(work)), lower=True, check_finite=False)
                except np.linalg.LinAlgError:
                    break
                dl = cho_solve(s_chol, aw @ cho_solve(chol, r1, check_finite=False) - r2, check_finite=False)
                dz = cho_solve(chol, r1 - aw.T @ dl, check_finite=False)
                lam2 = lam.copy()
                lam2[work] = lam[work] + dl
                if np.any(lam2[work] < -DUAL_TOL):
                    break
            else:
                dz = cho_solve(chol, -(p.H @ z + f), check_finite=False)
                lam2 = lam
            z2 = z + dz
            if self._kkt_residual(p, z2, lam2) <= self._kkt_residual(p, z, lam):
                z, lam = z2, lam2
            else:
                break
        return z, np.maximum(lam, 0.0)

    @staticmethod
    def _kkt_residual(p: QpProblem, z, lam) -> float:
        stat = float(np.max(np.abs(p.H @ z + p.f + p.A_in.T @ lam), initial=0.0))
        if p.A_in.shape[0] == 0:
            return stat
        slack = p.A_in @ z - p.b_in
        feas = float(np.max(slack, initial=0.0))
        comp = float(np.max(np.abs(lam * slack), initial=0.0))
        dual = float(np.max(-lam, initial=0.0))
        return max(stat, feas, comp, dual)
