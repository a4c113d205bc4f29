"""Differential inverse kinematics for a configurable serial chain.

Closed-loop pose error plus a null-space term that pushes redundant joints away
from their limits.  The harness uses this only as a post-stage (task trajectory
to joint trajectory); the stability metrics never depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geom import AxisAngle, axis_angle_to_rotation, rotation_to_axis_angle


@dataclass(frozen=True)
class Joint:
    kind: str  # "revolute" | "prismatic"
    axis: np.ndarray
    origin_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    origin_rot: np.ndarray = field(default_factory=lambda: np.eye(3))
    lower: float = -np.pi
    upper: float = np.pi

    def __post_init__(self):
        if self.kind not in ("revolute", "prismatic"):
            raise ValidationError(f"unknown joint kind {self.kind!r}")
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(axis)
        if n < 1e-12:
            raise ValidationError("joint axis must be nonzero")
        object.__setattr__(self, "axis", axis / n)
        object.__setattr__(self, "origin_pos", np.asarray(self.origin_pos, dtype=float).reshape(3))
        object.__setattr__(self, "origin_rot", np.asarray(self.origin_rot, dtype=float).reshape(3, 3))
        if not self.lower < self.upper:
            raise ValidationError("joint limits must satisfy lower < upper")


@dataclass(frozen=True)
class KinematicChain:
    joints: tuple[Joint, ...]
    tool_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tool_rot: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if len(self.joints) < 1:
            raise ValidationError("chain needs at least one joint")
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "tool_pos", np.asarray(self.tool_pos, dtype=float).reshape(3))
        object.__setattr__(self, "tool_rot", np.asarray(self.tool_rot, dtype=float).reshape(3, 3))

    @property
    def n(self) -> int:
        return len(self.joints)

    def limits(self):
        lo = np.array([j.lower for j in self.joints])
        hi = np.array([j.upper for j in self.joints])
        return lo, hi

    def midrange(self) -> np.ndarray:
        lo, hi = self.limits()
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class IkGains:
    k_pos: np.ndarray = field(default_factory=lambda: 20.0 * np.eye(3))
    k_rot: np.ndarray = field(default_factory=lambda: 20.0 * np.eye(3))
    k_limits: np.ndarray | None = None  # n x n positive diagonal; default 1e-3 I


def chain_from_config(doc) -> KinematicChain:
    """Build a chain from a config document: a list of joints (`kind`, `axis`,
    optional `origin`/`origin_rpy`, `lower`, `upper`) or {"joints": [...],
    "tool": [x,y,z]}."""
    if isinstance(doc, dict):
        entries = doc.get("joints")
        tool = np.asarray(doc.get("tool", [0.0, 0.0, 0.0]), dtype=float)
    else:
        entries, tool = doc, np.zeros(3)
    if not entries:
        raise ValidationError("chain config needs at least one joint")
    joints = []
    for i, e in enumerate(entries):
        try:
            rot = np.eye(3)
            if "origin_rpy" in e:
                r, p, y = (float(v) for v in e["origin_rpy"])
                rot = (
                    axis_angle_to_rotation(AxisAngle(np.array([0.0, 0.0, 1.0]), y))
                    @ axis_angle_to_rotation(AxisAngle(np.array([0.0, 1.0, 0.0]), p))
                    @ axis_angle_to_rotation(AxisAngle(np.array([1.0, 0.0, 0.0]), r))
                )
            joints.append(
                Joint(
                    kind=e["kind"],
                    axis=np.asarray(e["axis"], dtype=float),
                    origin_pos=np.asarray(e.get("origin", [0.0, 0.0, 0.0]), dtype=float),
                    origin_rot=rot,
                    lower=float(e.get("lower", -np.pi)),
                    upper=float(e.get("upper", np.pi)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"joints[{i}]: {exc}") from exc
    return KinematicChain(tuple(joints), tool_pos=tool)


def fk(chain: KinematicChain, q: np.ndarray):
    """(position, rotation) of the last joint frame."""
    q = np.asarray(q, dtype=float)
    pos = np.zeros(3)
    rot = np.eye(3)
    for joint, qi in zip(chain.joints, q):
        pos = pos + rot @ joint.origin_pos
        rot = rot @ joint.origin_rot
        if joint.kind == "revolute":
            rot = rot @ axis_angle_to_rotation(AxisAngle(joint.axis, float(qi)))
        else:
            pos = pos + rot @ (joint.axis * float(qi))
    pos = pos + rot @ chain.tool_pos
    rot = rot @ chain.tool_rot
    return pos, rot


def jacobian(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    """Geometric Jacobian (6 x n): linear rows on top, angular below."""
    q = np.asarray(q, dtype=float)
    # Forward pass collecting each joint's world axis and application point.
    pos = np.zeros(3)
    rot = np.eye(3)
    axes, points, kinds = [], [], []
    for joint, qi in zip(chain.joints, q):
        pos = pos + rot @ joint.origin_pos
        rot = rot @ joint.origin_rot
        axes.append(rot @ joint.axis)
        points.append(pos.copy())
        kinds.append(joint.kind)
        if joint.kind == "revolute":
            rot = rot @ axis_angle_to_rotation(AxisAngle(joint.axis, float(qi)))
        else:
            pos = pos + rot @ (joint.axis * float(qi))
    tip = pos + rot @ chain.tool_pos
    jac = np.zeros((6, chain.n))
    for i in range(chain.n):
        if kinds[i] == "revolute":
            jac[:3, i] = np.cross(axes[i], tip - points[i])
            jac[3:, i] = axes[i]
        else:
            jac[:3, i] = axes[i]
    return jac


def limit_potential(chain: KinematicChain, q: np.ndarray) -> float:
    """Barrier-style potential: minimal at midrange, divergent at the limits."""
    lo, hi = chain.limits()
    q = np.asarray(q, dtype=float)
    denom = (hi - q) * (q - lo)
    if np.any(denom <= 0.0):
        raise ValidationError("configuration at or beyond a joint limit")
    return float(np.sum((hi - lo) ** 2 / denom))


def limit_potential_gradient(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    lo, hi = chain.limits()
    q = np.asarray(q, dtype=float)
    denom = (hi - q) * (q - lo)
    if np.any(denom <= 0.0):
        raise ValidationError("configuration at or beyond a joint limit")
    return -((hi - lo) ** 2) * (hi + lo - 2.0 * q) / denom**2


def damped_pinv(jac: np.ndarray, damping: float = 1e-4) -> np.ndarray:
    """J' (JJ' + damping^2 I)^-1; the exact pseudo-inverse at damping = 0."""
    if damping == 0.0:
        return np.linalg.pinv(jac)
    m = jac.shape[0]
    return jac.T @ np.linalg.solve(jac @ jac.T + damping**2 * np.eye(m), np.eye(m))


def pose_error(pos_d, rot_d, pos_s, rot_s) -> np.ndarray:
    """6-vector task error: position difference, axis-angle of R_d R_s'."""
    aa = rotation_to_axis_angle(rot_d @ rot_s.T)
    return np.concatenate([np.asarray(pos_d) - np.asarray(pos_s), aa.as_vector()])


def ik_step(chain: KinematicChain, gains: IkGains, q_s: np.ndarray,
            pos_d: np.ndarray, rot_d: np.ndarray, twist_d: np.ndarray,
            damping: float = 1e-4) -> np.ndarray:
    """Joint velocity command: task tracking plus null-space limit avoidance.

    The null-space direction descends the limit potential (the barrier grows at
    the limits, so descent is what avoids them).
    """
    q_s = np.asarray(q_s, dtype=float)
    pos_s, rot_s = fk(chain, q_s)
    err = pose_error(pos_d, rot_d, pos_s, rot_s)
    k_e = np.zeros((6, 6))
    k_e[:3, :3] = gains.k_pos
    k_e[3:, 3:] = gains.k_rot
    jac = jacobian(chain, q_s)
    j_pinv = damped_pinv(jac, damping)
    k_h = gains.k_limits if gains.k_limits is not None else 1e-3 * np.eye(chain.n)
    qdot0 = -k_h @ limit_potential_gradient(chain, q_s)
    task = j_pinv @ (np.asarray(twist_d, dtype=float) + k_e @ err)
    return task + (np.eye(chain.n) - j_pinv @ jac) @ qdot0
