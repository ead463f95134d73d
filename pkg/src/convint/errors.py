"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ConvintError(Exception):
    """Base class for library errors."""


class DomainError(ConvintError, ValueError):
    """An input lies outside the domain of an operation."""


class ConstraintError(DomainError):
    """A point violates a prescribed constraint such as the trace identity."""


class ConeError(DomainError):
    """A difference of phase points is not in the wave cone."""


class ClassificationError(DomainError):
    """Riemann data do not belong to the requested wave structure."""


class ContractError(ConvintError):
    """A caller broke an interface contract, e.g. a missing derivative stack."""


class InfeasibleError(ConvintError):
    """A search or construction found no admissible point."""


class SolverError(ConvintError):
    """A root finder or bracket expansion failed."""
