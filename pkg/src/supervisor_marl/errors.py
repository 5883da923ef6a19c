"""Exception hierarchy shared by every subpackage."""


class SupervisorError(Exception):
    """Base class for all package errors."""


class InputError(SupervisorError, ValueError):
    """An argument is malformed or out of its documented range."""


class ContractViolation(SupervisorError, RuntimeError):
    """An operation was called in a state its contract forbids."""


class ArithmeticRangeError(SupervisorError, OverflowError):
    """An exact integer result does not fit in a signed 64-bit integer."""


class SizeGuardError(SupervisorError, ValueError):
    """An enumeration was refused because it would exceed its size guard."""


class NonFiniteLossError(SupervisorError, FloatingPointError):
    """A training loss or parameter became NaN or infinite."""


class CheckpointError(SupervisorError, ValueError):
    """A checkpoint file is corrupt or does not match the current config."""
