"""Exception hierarchy shared by the library and the command line.

Each error class carries the process exit code used by ``orrlab``.
"""


class OrrlabError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(OrrlabError, ValueError):
    """Invalid configuration, grid mismatch or malformed input file."""

    exit_code = 1


class BlowUpError(OrrlabError, FloatingPointError):
    """Non-finite values appeared during time stepping."""

    exit_code = 2

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StepSizeError(OrrlabError):
    """Time step violates the advective CFL bound."""

    exit_code = 2


class RangeError(OrrlabError, OverflowError):
    """A multiplier or norm left the representable log-space range."""

    exit_code = 3


class DivergenceError(OrrlabError):
    """A fixed-point iteration stopped contracting."""

    exit_code = 4

    def __init__(self, message, perturbation=None):
        super().__init__(message)
        self.perturbation = perturbation


class InvertibilityError(OrrlabError):
    """The map y -> v is not monotone."""

    exit_code = 3


class CheckpointError(OrrlabError):
    """Corrupt, truncated or mismatched checkpoint file."""

    exit_code = 1
