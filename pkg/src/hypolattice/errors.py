"""Shared exception types."""


class HypolatticeError(Exception):
    """Base class for all package errors."""


class InvalidInputError(HypolatticeError, ValueError):
    """Raised when an operation receives out-of-contract input."""


class HypothesisViolation(HypolatticeError):
    """Raised when a validated object fails one of its standing hypotheses."""

    def __init__(self, name, message):
        self.name = name
        super().__init__(f"{name}: {message}")


class BlowUpError(HypolatticeError):
    """Raised when a trajectory leaves the finite domain (non-finite state)."""

    def __init__(self, time, message="trajectory blew up"):
        self.time = time
        super().__init__(f"{message} at t={time}")


class SingularShiftError(HypolatticeError):
    """Raised when the drift-removal shift is undefined (e.g. Grushin at x=0)."""


class CertificateRefused(HypolatticeError):
    """Raised when a candidate drift certificate fails at a sampled witness."""

    def __init__(self, message, witness=None, value=None):
        self.witness = witness
        self.value = value
        super().__init__(message)
