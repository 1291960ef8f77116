"""Exception types raised by the solvers."""


class PhenoEssError(Exception):
    """Base class for all package errors."""


class InvalidDomainError(PhenoEssError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class NoBracketError(PhenoEssError, ValueError):
    """The residual does not change sign over the supplied bracket."""


class NoConvergenceError(PhenoEssError, RuntimeError):
    """An iterative procedure exhausted its iteration budget."""


class InconsistentSolutionError(PhenoEssError, RuntimeError):
    """A solved equilibrium fails its own boundary conditions."""


class InvalidRegimeError(PhenoEssError, ValueError):
    """The requested quantity is undefined in the current competition regime."""
