"""Exception hierarchy shared by every module of the package."""


class PharmonicError(Exception):
    """Base class for all package errors."""


class MetricNotSPD(PharmonicError, ValueError):
    """A metric evaluation (or a supplied constant metric) is not symmetric positive definite."""


class OutOfDomain(PharmonicError, ValueError):
    """A point or ball leaves the computational domain."""


class EmptySampleSet(PharmonicError, ValueError):
    pass


class DegeneratePair(PharmonicError, ValueError):
    """Two coincident points were given to a seminorm estimate."""


class RefinementOutOfRange(PharmonicError, ValueError):
    pass


class EmptyRegion(PharmonicError, ValueError):
    """A ball region has no overlap with the mesh."""


class ShapeMismatch(PharmonicError, ValueError):
    pass


class RegionTooCoarse(PharmonicError, ValueError):
    pass


class UnsupportedExponentCombo(PharmonicError, ValueError):
    pass


class InsufficientScales(PharmonicError, ValueError):
    pass


class DegenerateRegion(PharmonicError, ValueError):
    """A ratio estimate has a vanishing denominator."""


class SolveDiverged(PharmonicError, RuntimeError):
    """A solver failed to converge.

    The best iterate found so far is attached as ``best`` (a ``SolveReport``
    or ``None``) so that callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(PharmonicError, ValueError):
    """Invalid experiment configuration; ``path`` locates the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class NonReproducible(PharmonicError, RuntimeError):
    def __init__(self, message, artifact=None, row=None):
        super().__init__(message)
        self.artifact = artifact
        self.row = row
