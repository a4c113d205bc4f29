"""Friction-free tray orientation and its exact/approximate time derivatives.

The tilt is chosen so gravity plus normal support supplies the whole desired
acceleration (zero tangential contact force).  Writing c = accel x g,
u = g.(g - accel) and s = ||c||, the tilt is alpha = atan2(s, u) about the unit
axis c/s.  All derivative formulas below are chain-rule expansions of that
representation; the atan2 form is used instead of the equivalent arccos because
it keeps full precision as alpha -> 0, which the branch-limit checks need.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericGuardError
from .geom import AxisAngle, cross, norm
from .vobject import FREE_FALL_FLOOR

#: Branch threshold for the alpha = 0 limit forms (radians).  Far below any
#: physically meaningful tilt; the two branches agree to ~1e-6 there.
EPS_ALPHA = 1e-6

#: World gravity, g3 < 0.
GRAVITY = np.array([0.0, 0.0, -9.81])


@dataclass
class TrayState:
    """Position chain derivatives plus orientation state of the tray reference point."""

    pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    jerk: np.ndarray = field(default_factory=lambda: np.zeros(3))
    snap: np.ndarray = field(default_factory=lambda: np.zeros(3))
    phi: AxisAngle = field(default_factory=AxisAngle.identity)
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))


def _support_terms(accel: np.ndarray, g: np.ndarray):
    """(c, s, u) with c = accel x g, s = ||c||, u = g.(g - accel); guards free fall."""
    rel = g - accel
    if norm(rel) <= FREE_FALL_FLOOR:
        raise NumericGuardError("commanded acceleration is in free fall")
    u = float(g @ rel)
    if u <= 0.0:
        raise NumericGuardError("commanded support direction is at or past horizontal")
    c = cross(accel, g)
    return c, norm(c), u


def tilt_angle(accel: np.ndarray, g: np.ndarray = GRAVITY) -> float:
    """Tilt angle alpha in [0, pi/2) for a desired acceleration."""
    _, s, u = _support_terms(np.asarray(accel, dtype=float), g)
    return float(np.arctan2(s, u))


def friction_free_orientation(accel: np.ndarray, g: np.ndarray = GRAVITY) -> AxisAngle:
    """Tray orientation cancelling tangential contact force for ``accel``."""
    accel = np.asarray(accel, dtype=float)
    c, s, u = _support_terms(accel, g)
    alpha = float(np.arctan2(s, u))
    if alpha < EPS_ALPHA:
        return AxisAngle.identity()
    return AxisAngle(c / s, alpha)


def exact_orientation_derivatives(
    accel: np.ndarray, jerk: np.ndarray, snap: np.ndarray, g: np.ndarray = GRAVITY
) -> tuple[np.ndarray, np.ndarray]:
    """Angular velocity and acceleration of the friction-free orientation.

    Full expansion d/dt(alpha*n) and d^2/dt^2(alpha*n) including axis motion;
    below the ``EPS_ALPHA`` branch the continuous limit form is used, so the
    output has no jump at the branch.
    """
    accel = np.asarray(accel, dtype=float)
    jerk = np.asarray(jerk, dtype=float)
    snap = np.asarray(snap, dtype=float)
    c, s, u = _support_terms(accel, g)
    cd = cross(jerk, g)
    cdd = cross(snap, g)
    u_d = -float(g @ jerk)
    u_dd = -float(g @ snap)
    q = s * s + u * u  # = ||g||^2 ||g - accel||^2

    alpha = float(np.arctan2(s, u))
    if alpha < EPS_ALPHA:
        # alpha/s -> 1/sqrt(q); terms proportional to c (||c|| <= tan(eps)*u) are dropped.
        f0 = 1.0 / np.sqrt(q)
        f0_d = -(float(c @ cd) + u * u_d) / q**1.5
        omega = f0 * cd
        omega_dot = f0 * cdd + 2.0 * f0_d * cd
        return omega, omega_dot

    n = c / s
    s_d = float(n @ cd)
    s_dd = (float(cd @ cd) + float(c @ cdd)) / s - float(c @ cd) ** 2 / s**3
    alpha_d = (u * s_d - s * u_d) / q
    alpha_dd = (u * s_dd - s * u_dd) / q - alpha_d * (2.0 * s * s_d + 2.0 * u * u_d) / q
    n_d = (cd - n * float(n @ cd)) / s
    n_dd = cdd / s - 2.0 * cd * s_d / s**2 - c * s_dd / s**2 + 2.0 * c * s_d**2 / s**3
    omega = alpha_d * n + alpha * n_d
    omega_dot = alpha_dd * n + 2.0 * alpha_d * n_d + alpha * n_dd
    return omega, omega_dot


def approx_omega_dot(
    accel: np.ndarray, snap: np.ndarray, g: np.ndarray = GRAVITY
) -> np.ndarray:
    """Leading-term angular acceleration (snap x g scaled); third component is 0."""
    accel = np.asarray(accel, dtype=float)
    snap = np.asarray(snap, dtype=float)
    c, s, u = _support_terms(accel, g)
    cdd = cross(snap, g)
    alpha = float(np.arctan2(s, u))
    if alpha < EPS_ALPHA:
        return cdd / np.sqrt(s * s + u * u)
    return cdd * (alpha / s)


def snap_bound(
    accel: np.ndarray, omega_dot_max: float, g: np.ndarray = GRAVITY
) -> float:
    """Largest ||snap|| consistent with ||omega_dot|| <= omega_dot_max at ``accel``.

    Continuous across the tilt branch: near alpha = 0 the tilted form converges
    to omega_dot_max * |g3 - accel3|.
    """
    accel = np.asarray(accel, dtype=float)
    _, s, u = _support_terms(accel, g)
    alpha = float(np.arctan2(s, u))
    if alpha < EPS_ALPHA:
        return float(omega_dot_max * abs(g[2] - accel[2]))
    a12 = float(np.hypot(accel[0], accel[1]))
    return float(omega_dot_max * a12 / alpha)
