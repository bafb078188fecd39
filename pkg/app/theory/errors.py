"""Exception hierarchy for the theory package."""


class BCTError(Exception):
    """Base class for every error raised by the theory package."""


class ShapeMismatchError(BCTError, ValueError):
    """Raised when sizes, factor lists or association trees do not line up."""


class InvalidCutError(BCTError, ValueError):
    """Raised when a bipartition position is outside 1..n-1."""


class InvalidStateError(BCTError, ValueError):
    """Raised when weights are negative or sum above one."""


class InvalidEffectError(BCTError, ValueError):
    """Raised when an effect leaves [0, 1] or a test does not sum to the unit effect."""


class InvalidChannelError(BCTError, ValueError):
    """Raised when a channel row is not a probability distribution."""


class NotNormalizedError(BCTError, ValueError):
    """Raised when a distribution (or a state required to be deterministic) does not sum to one."""


class MemoryBoundError(BCTError, ValueError):
    """Raised when an enumeration would exceed the configured memory bound."""


class OracleBoundError(BCTError, ValueError):
    """Raised when an oracle is asked to run above its size bound."""


class InconsistentMarginalError(BCTError, ValueError):
    """Raised when a joint state does not marginalize to the stated target."""


class InfeasibleCodecError(BCTError, RuntimeError):
    """Raised when the typical-set codec does not fit its register (internal error)."""


class InvariantViolation(BCTError, RuntimeError):
    """Raised when a cross-checked quantity disagrees between two computation paths."""
