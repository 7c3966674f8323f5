"""Exception hierarchy shared by every module."""


class ExitBoundsError(Exception):
    pass


class DomainError(ExitBoundsError, ValueError):
    """An argument lies outside the domain of the function."""


class BracketError(ExitBoundsError, ValueError):
    """The root-finding interval does not bracket a sign change."""


class ConvergenceError(ExitBoundsError, RuntimeError):
    """An iterative method ran out of budget before meeting its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NotAvailableError(ExitBoundsError):
    """No closed form is implemented for this (domain, quantity) pair."""


class RunawayError(ExitBoundsError, RuntimeError):
    """A simulated path never left the domain within the step cap."""


class InvariantViolation(ExitBoundsError, AssertionError):
    """An asserted mathematical invariant failed beyond tolerance."""
