"""Minimal 3-vector / rotation / axis-angle algebra used by the rest of the stack.

Vectors are plain ``numpy`` arrays of shape (3,); rotations are 3x3 orthonormal
matrices.  Nothing here is general-purpose linear algebra -- it is exactly the
set of operations the tray controller needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Canonical axis reported for the zero rotation (any unit vector works: angle is 0).
ZERO_AXIS = np.array([0.0, 0.0, 1.0])


def vec3(x, y=None, z=None) -> np.ndarray:
    """Build a float (3,) array from three scalars or any length-3 sequence."""
    if y is None:
        a = np.asarray(x, dtype=float).reshape(3)
        return a.copy()
    return np.array([x, y, z], dtype=float)


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Hand-rolled: np.cross has noticeable call overhead for single 3-vectors
    # and this sits inside the 50 Hz loop.
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def norm(a: np.ndarray) -> float:
    return float(np.sqrt(a @ a))


@dataclass(frozen=True)
class AxisAngle:
    """Rotation of ``angle`` radians about the unit vector ``axis``.

    The zero rotation is canonically (axis=(0,0,1), angle=0).  ``angle`` lies in
    [0, pi]; the axis carries the sign.
    """

    axis: np.ndarray
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float).reshape(3))
        object.__setattr__(self, "angle", float(self.angle))

    @staticmethod
    def identity() -> "AxisAngle":
        return AxisAngle(ZERO_AXIS, 0.0)

    def as_vector(self) -> np.ndarray:
        """angle * axis, the rotation-vector form."""
        return self.axis * self.angle


def axis_angle_to_rotation(phi: AxisAngle) -> np.ndarray:
    """Rodrigues map: 3x3 rotation matrix for an axis-angle pair."""
    if phi.angle == 0.0:
        return np.eye(3)
    k = phi.axis
    s, c = np.sin(phi.angle), np.cos(phi.angle)
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + s * kx + (1.0 - c) * (kx @ kx)


def rotation_to_axis_angle(rot: np.ndarray) -> AxisAngle:
    """Inverse of :func:`axis_angle_to_rotation` (angle in [0, pi])."""
    # Off-diagonal antisymmetric part gives sin(angle) * axis.
    w = np.array(
        [rot[2, 1] - rot[1, 2], rot[0, 2] - rot[2, 0], rot[1, 0] - rot[0, 1]]
    )
    s = 0.5 * norm(w)
    c = 0.5 * (np.trace(rot) - 1.0)
    angle = float(np.arctan2(s, c))
    if angle < 1e-12:
        return AxisAngle.identity()
    if s > 1e-6:
        return AxisAngle(w / (2.0 * s), angle)
    # angle near pi: recover the axis from the symmetric part.
    m = 0.5 * (rot + np.eye(3))
    axis = np.sqrt(np.maximum(np.diag(m), 0.0))
    k = int(np.argmax(axis))
    axis = m[:, k] / axis[k]
    axis /= norm(axis)
    return AxisAngle(axis, angle)


def rotation_vector_to_axis_angle(v: np.ndarray) -> AxisAngle:
    """Rotation-vector (angle*axis) form back to AxisAngle."""
    angle = norm(v)
    if angle < 1e-12:
        return AxisAngle.identity()
    return AxisAngle(v / angle, angle)
