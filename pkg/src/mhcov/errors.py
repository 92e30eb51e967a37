"""Exception hierarchy shared by every module.

Exceptions are grouped so the command-line layer can map them onto stable
exit codes: configuration and contract problems (exit 2), numerical
failures (exit 3), and violated mathematical invariants (exit 4).
"""

from __future__ import annotations


class MhcovError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParameterError(MhcovError):
    """A constructor or CLI argument lies outside its valid domain."""

    exit_code = 2


class ContractError(MhcovError):
    """An operation was called with inputs that violate its precondition."""

    exit_code = 2


class AtomicMeasureError(ContractError):
    """A two-point (atomic) proposal was used where a density is required."""


class InvalidStateError(ContractError):
    """The chain reached or was started at a state with zero target density."""


class NumericError(MhcovError):
    """A numerical routine failed to reach its requested tolerance.

    Attributes
    ----------
    achieved_tol : float or None
        Error estimate actually achieved before giving up, when known.
    """

    exit_code = 3

    def __init__(self, message: str, achieved_tol: float | None = None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class ConsistencyError(NumericError):
    """Two independent routes to the same quantity disagree beyond tolerance."""


class DesignError(NumericError):
    """The proposal-design solver could not bracket or refine its root."""


class InvariantViolationError(MhcovError):
    """A quantity violated a property that should hold mathematically."""

    exit_code = 4


class DegenerateChainError(InvariantViolationError):
    """A chain has zero empirical variance, so correlations are undefined."""
