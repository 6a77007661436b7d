"""Exception hierarchy shared by all qcorr modules."""

from __future__ import annotations


class QcorrError(Exception):
    """Base class for every error raised by qcorr."""


class DomainError(QcorrError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class NormalizationError(DomainError):
    """A probability vector does not sum to one (or has large negative entries)."""


class StructureError(QcorrError):
    """A reduced density matrix is not of the expected X form."""


class ResourceError(QcorrError):
    """The request exceeds the resource guard (e.g. too many sites for dense ED)."""


class NumericalError(QcorrError, ArithmeticError):
    """A numerical consistency check failed."""


class OptimizationError(NumericalError):
    """A measurement optimisation did not converge.

    The best iterate found so far is attached as ``best``.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best
