"""Exception types shared across the engine."""


class IrrPinnError(Exception):
    """Base class for all engine errors."""


class NonFiniteValue(IrrPinnError):
    """Network evaluation produced NaN/Inf (stores offending point index)."""

    def __init__(self, message, point_index=None):
        super().__init__(message)
        self.point_index = point_index


class NonFiniteGradient(IrrPinnError):
    """A parameter gradient contains NaN/Inf."""


class UnsupportedOp(IrrPinnError):
    """Loss function used a primitive outside the supported set."""


class InvalidStep(IrrPinnError):
    """Finite-difference step size must be positive."""


class ConfigError(IrrPinnError):
    """Inconsistent network or run configuration."""


class EmptySet(IrrPinnError):
    """An operation received an empty collocation set."""


class PoolTooSmall(IrrPinnError):
    """Adaptive refinement pool smaller than the requested subset."""


class BracketError(IrrPinnError):
    """Bisection bracket never classifies into flashback/blow-off."""


class SolverError(IrrPinnError):
    """A reference solver failed to converge (stores step index)."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class DiscriminantError(IrrPinnError):
    """Unphysical eigenvalue/temperature pair in the flow relations."""


class ZeroReference(IrrPinnError):
    """Relative error is undefined for an identically-zero reference."""


class NoInterface(IrrPinnError):
    """Level-set extraction found no crossing along the requested ray."""
