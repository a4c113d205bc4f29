"""Exception types shared across the controller stack."""


class ConfigurationError(ValueError):
    """A run/config document is structurally unusable (missing preset, empty manifest, ...)."""


class ValidationError(ValueError):
    """A value violates a documented invariant (non-positive dimension, unstable filter, ...)."""


class NumericGuardError(ArithmeticError):
    """A numeric floor was crossed that signals an impossible commanded state (near free fall)."""
