"""Exception types shared by the solvers and the command line front end."""


class SBQPTError(Exception):
    """Base class for all package errors."""


class DomainError(SBQPTError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class PhaseError(DomainError):
    """The requested quantity presumes the delocalized phase."""


class NumericalError(SBQPTError, ArithmeticError):
    """A numerical routine failed to reach its requested accuracy.

    ``achieved`` carries the error estimate that was actually reached, when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ConvergenceError(NumericalError):
    """An iterative solver ran out of iterations."""
