"""Exception types shared across the package."""


class FDQNError(Exception):
    """Base class for all package errors."""


class ConfigError(FDQNError, ValueError):
    """Invalid configuration value, unknown key or inconsistent spec."""


class ContractError(FDQNError, ValueError):
    """A caller broke a precondition (shape mismatch, index out of range)."""


class NumericError(FDQNError, ArithmeticError):
    """NaN or Inf found where finite values are required."""


class NotReadyError(FDQNError):
    """Replay buffer holds fewer transitions than requested."""


class UsageError(FDQNError):
    """An environment was driven in an invalid order (e.g. step after done)."""


class CorruptCheckpointError(FDQNError):
    """A checkpoint file failed one of its integrity checks."""
