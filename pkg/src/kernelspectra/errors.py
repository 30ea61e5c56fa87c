"""Exception types shared across the package."""


class KernelSpectraError(Exception):
    """Base class for all package errors."""


class EvaluationError(KernelSpectraError):
    """A user-supplied function returned a non-finite value."""


class DegenerateActivationError(KernelSpectraError):
    """Raw activation has (numerically) zero variance under the Gaussian."""


class SingularArgumentError(KernelSpectraError):
    """Rational-moment denominator vanishes at an atom of the measure."""


class SolverError(KernelSpectraError):
    """Fixed-point iteration failed to converge within the retry budget.

    Carries the best iterate seen so callers that tolerate partial results
    (e.g. density sweeps) can still extract a flagged value.
    """

    def __init__(self, message, best=None, residual=None, iterations=0, reinits=0):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations
        self.reinits = reinits


class CurveQualityError(KernelSpectraError):
    """Too many grid points failed to converge; the curve is still attached."""

    def __init__(self, message, curve):
        super().__init__(message)
        self.curve = curve


class ContractViolationError(KernelSpectraError):
    """A solved state was combined with arguments it was not solved for."""


class IngestionError(KernelSpectraError):
    """Input matrix file could not be parsed or had the wrong shape."""


class SizeGuardError(KernelSpectraError):
    """Dense oracle assembly refused: problem exceeds the size guard."""
