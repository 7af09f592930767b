"""Exception hierarchy shared by every module."""


class FasUavError(Exception):
    """Base class for all library errors."""


class ParameterError(FasUavError, ValueError):
    """Invalid model or function parameters."""


class DomainError(FasUavError, ValueError):
    """Argument outside the domain of a function (pole, negative SNR, ...)."""


class DegeneratePoleError(ParameterError):
    """Two Gamma poles coincide, so a simple-residue formula does not apply."""


class ConvergenceError(FasUavError, ArithmeticError):
    """An iterative numerical method exhausted its refinement budget.

    ``estimates`` carries the last estimates obtained, most recent last.
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)
