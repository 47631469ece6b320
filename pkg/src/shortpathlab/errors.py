"""Exception hierarchy and the process exit codes the CLI maps them to."""

from __future__ import annotations


class ShortPathLabError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ShortPathLabError):
    """Bad parameters or malformed inputs (exit code 2)."""


class PairingError(ValidationError):
    """Chain kind, state-space kind, or cost kind do not fit together."""


class MembershipError(ValidationError):
    """A configuration is not a member of the state space."""


class ParseError(ValidationError):
    """Malformed file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateConstraintError(ValidationError):
    """CSP constraint with s in {0, 2^k}: penalty weights are undefined."""


class GenerationError(ShortPathLabError):
    """Random-structure generation exhausted its retry budget."""


class CapacityError(ShortPathLabError):
    """State space or operator exceeds the configured memory budget (exit code 4)."""


class ConvergenceError(ShortPathLabError):
    """Eigensolver failed to converge; carries the best residuals seen (exit code 3)."""

    def __init__(self, message: str, residuals: tuple[float, ...] = ()):
        super().__init__(message)
        self.residuals = residuals


class ReversibilityError(ShortPathLabError):
    """Detailed balance residual above tolerance; indicates a kernel bug."""


class InvariantBreachError(ShortPathLabError):
    """A documented model invariant failed on the given inputs (e.g. E* >= 0)."""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code (0 success, 2 validation, 3 convergence, 4 capacity)."""
    if isinstance(exc, ValidationError):
        return 2
    if isinstance(exc, ConvergenceError):
        return 3
    if isinstance(exc, CapacityError):
        return 4
    return 1
