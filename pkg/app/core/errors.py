"""Exceptions raised by the verification engines."""

from app.core.constants import EXIT_FAILURE, EXIT_USAGE


class VerificationError(Exception):
    """Base class; `exit_code` is what the CLI returns when it escapes."""

    exit_code = EXIT_FAILURE


class ContractError(VerificationError, ValueError):
    """Input violates a documented precondition."""


class NonRegularError(ContractError):
    """Element is not regular (T^2 = 4N, or a = b)."""


class UnsupportedCaseError(VerificationError):
    """Input lies outside the implemented cases."""


class DivergenceError(VerificationError, ArithmeticError):
    """Geometric tail with ratio of absolute value at least 1."""


class KernelMismatchError(VerificationError):
    """Kernel is not constant on a cell of the declared decomposition."""


class PoleError(VerificationError, ArithmeticError):
    """Evaluation at a pole of an L-function."""


class AccuracyError(VerificationError):
    """Quadrature did not reach the requested tolerance."""


class ResourceLimitError(VerificationError, MemoryError):
    exit_code = EXIT_USAGE


class ConfigError(VerificationError, ValueError):
    exit_code = EXIT_USAGE
