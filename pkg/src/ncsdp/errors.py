"""Exception types shared across the solver."""

from __future__ import annotations


class NcsdpError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(NcsdpError):
    """Malformed argument: wrong shape, non-finite data, bad parameter value."""


class DomainViolation(NcsdpError):
    """An iterate left the interior of the cone (log-det barrier undefined)."""


class NumericalFailure(NcsdpError):
    """A numerical routine produced non-finite or unusable output."""


class PreconditionViolated(NcsdpError):
    """An update step was invoked while its trigger condition does not hold."""


class ConstantsRequired(NcsdpError):
    """Fixed step-size mode needs smoothness constants the problem does not carry."""


class LineSearchStall(NcsdpError):
    """Backtracking shrank the step below its floor without an acceptable trial."""


class GenerationFailed(NcsdpError):
    """Random instance generation exhausted its attempt budget."""
