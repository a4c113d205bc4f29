"""Second-order IIR filtering of operator input and backward-difference derivatives.

Only evaluation of given coefficients lives here (no filter design).  The three
named presets carry the published transfer functions used by the experiments:
``sim`` for the simulation runs, ``F`` / ``FSC`` for the two hardware control
modes.  All three have unity DC gain and poles well inside the unit circle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ValidationError


@dataclass
class ReferenceState:
    """Filtered reference position with its estimated velocity and acceleration."""

    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray

    @staticmethod
    def zero() -> "ReferenceState":
        return ReferenceState(np.zeros(3), np.zeros(3), np.zeros(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.pos, self.vel, self.acc])


@dataclass(frozen=True)
class BiquadCoeffs:
    """y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def poles(self) -> np.ndarray:
        return np.roots([1.0, self.a1, self.a2])

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def dc_gain(self) -> float:
        return (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)

    def validate(self):
        if not self.is_stable():
            raise ValidationError(f"unstable filter: poles {self.poles()}")


FILTER_PRESETS = {
    "sim": BiquadCoeffs(0.0036, 0.0072, 0.0036, -1.8228, 0.8372),
    "F": BiquadCoeffs(0.0201, 0.0402, 0.0201, -1.561, 0.6414),
    "FSC": BiquadCoeffs(0.0976, 0.1953, 0.0976, -0.9428, 0.3333),
}


def filter_coeffs(spec) -> BiquadCoeffs:
    """Resolve a preset name or a {b: [...], a: [...]} mapping to coefficients."""
    if isinstance(spec, BiquadCoeffs):
        return spec
    if isinstance(spec, str):
        try:
            return FILTER_PRESETS[spec]
        except KeyError:
            raise ConfigurationError(
                f"unknown filter preset {spec!r}; available: {sorted(FILTER_PRESETS)}"
            ) from None
    b, a = spec["b"], spec["a"]
    if len(b) != 3 or len(a) not in (2, 3):
        raise ConfigurationError("filter spec needs 3 numerator and 2-3 denominator coefficients")
    if len(a) == 3:
        if a[0] != 1.0:
            raise ConfigurationError("denominator must be normalized (a0 = 1)")
        a = a[1:]
    coeffs = BiquadCoeffs(b[0], b[1], b[2], a[0], a[1])
    coeffs.validate()
    return coeffs


class BiquadFilter:
    """Direct-Form-II-transposed biquad applied per axis.

    State is step-matched on the first sample: the filter starts at the fixed
    point of a constant input equal to that sample, so a stationary operator
    produces no startup transient.
    """

    def __init__(self, coeffs: BiquadCoeffs, channels: int = 3):
        coeffs.validate()
        self.coeffs = coeffs
        self.channels = channels
        self._s1 = np.zeros(channels)
        self._s2 = np.zeros(channels)
        self._primed = False

    def reset(self):
        self._s1[:] = 0.0
        self._s2[:] = 0.0
        self._primed = False

    def prime(self, x0: np.ndarray):
        """Seed the memory with the constant-input fixed point for ``x0``."""
        x0 = np.asarray(x0, dtype=float)
        c = self.coeffs
        # Fixed point of the DF2T recurrence for constant input (unity DC gain assumed).
        self._s2 = (c.b2 - c.a2) * x0
        self._s1 = (c.b1 - c.a1) * x0 + self._s2
        self._primed = True

    def step(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self._primed:
            self.prime(x)
        c = self.coeffs
        y = c.b0 * x + self._s1
        self._s1 = c.b1 * x - c.a1 * y + self._s2
        self._s2 = c.b2 * x - c.a2 * y
        return y


def filter_step(filt: BiquadFilter, x: np.ndarray) -> np.ndarray:
    """Functional alias for :meth:`BiquadFilter.step`."""
    return filt.step(x)


class Differentiator:
    """Backward-difference velocity/acceleration estimates at fixed dt.

    Causal by construction (this runs in the real-time loop).  With fewer than
    three samples the estimates are zero -- the documented startup mode, which
    is also exact when the filter above is step-matched.
    """

    def __init__(self, dt: float, channels: int = 3):
        if dt <= 0.0:
            raise ValidationError("dt must be positive")
        self.dt = dt
        self._hist: list[np.ndarray] = []
        self.channels = channels

    def reset(self):
        self._hist.clear()

    def push(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Append a sample; return (velocity, acceleration) estimates."""
        x = np.asarray(x, dtype=float).copy()
        self._hist.append(x)
        if len(self._hist) > 3:
            self._hist.pop(0)
        if len(self._hist) == 1:
            return np.zeros(self.channels), np.zeros(self.channels)
        if len(self._hist) == 2:
            v = (self._hist[-1] - self._hist[-2]) / self.dt
            return v, np.zeros(self.channels)
        x0, x1, x2 = self._hist
        v = (x2 - x1) / self.dt
        a = (x2 - 2.0 * x1 + x0) / self.dt**2
        return v, a


class ChainDifferentiator:
    """Backward differences up to the fourth derivative (filtering-only mode).

    Derivative k needs k+1 samples; before that it reads zero.
    """

    def __init__(self, dt: float, order: int = 4, channels: int = 3):
        self.dt = dt
        self.order = order
        self.channels = channels
        self._hist: list[np.ndarray] = []

    def reset(self):
        self._hist.clear()

    def push(self, x: np.ndarray) -> list[np.ndarray]:
        """Append a sample; return [x, dx, d2x, ..., d(order)x]."""
        x = np.asarray(x, dtype=float).copy()
        self._hist.append(x)
        if len(self._hist) > self.order + 1:
            self._hist.pop(0)
        out = [x]
        diff = [h.copy() for h in self._hist]
        for k in range(1, self.order + 1):
            diff = [
                (diff[i + 1] - diff[i]) / self.dt for i in range(len(diff) - 1)
            ]
            out.append(diff[-1] if diff else np.zeros(self.channels))
        return out
