"""Virtual offset-object construction and the tray angular-acceleration bound.

The constraint reduction works on cuboid approximations of the carried objects:
the single offset object takes the smallest base, the tallest height, the lowest
friction coefficient and the farthest feasible placement, so that bounding its
friction-cone and ZMP behaviour bounds every real object's.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericGuardError, ValidationError

#: Floor on ||accel - g|| below which the commanded state is treated as free fall.
FREE_FALL_FLOOR = 1e-6


@dataclass(frozen=True)
class ObjectSpec:
    """Cuboid approximation of one carried object.

    ``base_side`` is the side of the largest inscribed square of the contact
    footprint; ``height`` may be conservatively inflated by the caller.
    ``placement`` is the contact-center offset from the tray center, z = 0 on
    the tray plane.
    """

    id: str
    base_side: float
    height: float
    mu: float
    placement: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "placement", np.asarray(self.placement, dtype=float).reshape(3))

    def validate(self):
        for name, value in (("base_side", self.base_side), ("height", self.height), ("mu", self.mu)):
            if not value > 0.0:
                raise ValidationError(f"object {self.id!r}: {name} must be positive, got {value}")

    def com_offset(self) -> np.ndarray:
        """Object CoM in the tray body frame (uniform/vertex mass: base center + h/2)."""
        return self.placement + np.array([0.0, 0.0, 0.5 * self.height])

    def inertia_diag(self) -> np.ndarray:
        """Vertex-concentrated inertia diagonal for unit mass (worst case for tipping)."""
        d2, h2 = self.base_side**2, self.height**2
        return np.array([0.25 * (d2 + h2), 0.25 * (d2 + h2), 0.5 * d2])


@dataclass(frozen=True)
class TrayGeometry:
    radius: float = 0.2

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValidationError(f"tray radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class OffsetObject:
    """Worst-case virtual object dominating every manifest object's constraints."""

    d: float
    h: float
    mu: float
    p_a_norm: float
    mass: float = 1.0

    @property
    def inertia_max(self) -> np.ndarray:
        d2, h2 = self.d**2, self.h**2
        return np.array([0.25 * (d2 + h2), 0.25 * (d2 + h2), 0.5 * d2])

    @property
    def j_max(self) -> float:
        # Max diagonal rather than the closed form 0.25(d^2+h^2): stays correct
        # for degenerate manifests with d > h.
        return float(np.max(self.inertia_max))


def build_offset_object(manifest: list[ObjectSpec], tray: TrayGeometry) -> OffsetObject:
    """Reduce a manifest to the single offset object.

    Smallest base side, tallest height, lowest friction; placed at the farthest
    feasible CoM distance sqrt(R^2 + (h/2)^2) from the tray-center reference
    point.  Independent of manifest order and of object placements.
    """
    if not manifest:
        raise ConfigurationError("object manifest is empty")
    for spec in manifest:
        spec.validate()
    d = min(spec.base_side for spec in manifest)
    h = max(spec.height for spec in manifest)
    mu = min(spec.mu for spec in manifest)
    p_a_norm = float(np.sqrt(tray.radius**2 + (0.5 * h) ** 2))
    return OffsetObject(d=d, h=h, mu=mu, p_a_norm=p_a_norm)


def angular_accel_bound(obj: OffsetObject, accel_desired: np.ndarray, g: np.ndarray) -> float:
    """Tray angular-acceleration bound keeping the offset object inside both
    the friction cone and the ZMP footprint.

    Minimum of the two sufficient conditions; both scale linearly with
    ||accel - g||, so the bound tightens exactly when the support force does.
    """
    rel = np.asarray(accel_desired, dtype=float) - np.asarray(g, dtype=float)
    rel_norm = float(np.sqrt(rel @ rel))
    if rel_norm <= FREE_FALL_FLOOR:
        raise NumericGuardError(
            f"||accel - g|| = {rel_norm:.3e} is below the free-fall floor {FREE_FALL_FLOOR}"
        )
    theta0 = np.arctan(obj.mu)
    fc = rel_norm * np.sin(theta0) / obj.p_a_norm
    zmp = rel_norm * obj.d / (
        2.0 * obj.j_max / obj.mass + obj.p_a_norm * np.sqrt(obj.d**2 + obj.h**2)
    )
    return float(min(fc, zmp))
