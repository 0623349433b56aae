"""Exception types raised across the package."""


class ModHolderError(Exception):
    """Base class for all package errors."""


class PrecisionExhausted(ModHolderError):
    """The adaptive precision ladder hit its configured ceiling."""


class InsufficientDepth(ModHolderError):
    pass


class DepthOverflow(ModHolderError):
    """A constructed point's denominators outgrew the big-integer budget."""


class TailBoundFailure(ModHolderError):
    pass


class NotCertifiable(ModHolderError):
    """The series converges but no explicit tail bound is available."""


class NonConvergent(ModHolderError):
    pass


class NonIntegrable(ModHolderError):
    pass


class QuadratureBudgetExceeded(ModHolderError):
    pass


class RingDegenerate(ModHolderError):
    pass


class DegenerateFit(ModHolderError):
    """Fewer than three usable scales were available for a slope fit."""


class BisectionFailure(ModHolderError):
    pass


class PointSpecError(ModHolderError, ValueError):
    """A point descriptor string could not be parsed."""
