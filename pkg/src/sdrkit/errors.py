"""Exception hierarchy shared by all sdrkit modules."""


class SdrError(Exception):
    """Base class for every error raised by sdrkit."""


class DomainError(SdrError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ShapeError(SdrError, ValueError):
    """Array dimensions are inconsistent or empty."""


class ParameterError(SdrError, ValueError):
    """Kernel or tuning parameter outside its admissible range."""


class EvaluationError(SdrError, ArithmeticError):
    """A user function returned a non-finite value.

    Attributes
    ----------
    point : float
        The argument at which evaluation failed.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DegenerateDataError(SdrError, ValueError):
    """Data carries no spread (e.g. all rows identical)."""


class SlicingError(SdrError, ValueError):
    """The response cannot be cut into the requested number of slices."""


class RankDeficiencyError(SdrError, ArithmeticError):
    """Covariance or Gram matrix is singular beyond the eigenvalue floor."""


class NumericalError(SdrError, ArithmeticError):
    """An operator violated a numerical invariant (e.g. a non-PSD Gram)."""


class DegenerateSmootherError(SdrError, ArithmeticError):
    """GCV denominator vanished for a grid point."""


class EmptyResultError(SdrError, RuntimeError):
    """No replication of an experiment succeeded."""
