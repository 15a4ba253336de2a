"""Exception types raised across the package."""


class GridotError(ValueError):
    """Base class for input and consistency errors."""


class LengthMismatchError(GridotError):
    """A value array does not match the grid's bin count."""


class NegativeMassError(GridotError):
    """A histogram value is negative."""


class ZeroTotalError(GridotError):
    """A histogram carries no mass at all."""


class EmptyInputError(GridotError):
    """An input collection that must be non-empty is empty."""


class DegenerateBoundsError(GridotError):
    """A binning axis has max <= min."""


class ParseError(GridotError):
    """Malformed input file; the message carries the offending position."""


class UnsupportedFormatError(GridotError):
    """File is recognizable but uses an unsupported variant."""


class OverflowGuardError(GridotError):
    """Exact integer arithmetic would leave the safe 64-bit range."""


class IndexOutOfRangeError(GridotError):
    """A bin coordinate lies outside the grid."""


class ShapeMismatchError(GridotError):
    """Two histograms (or a histogram and a cost) disagree on grid shape."""


class UnbalancedTotalsError(GridotError):
    """Source and target totals differ where balance is required."""


class InvalidPlanError(GridotError):
    """A transport plan violates nonnegativity or its marginals."""


class InconsistentFlowsError(GridotError):
    """Per-axis flow families violate their connection conditions."""


class NumericalUnderflowError(GridotError):
    """A scaling kernel underflowed to zero where mass must move."""


class ZeroOptimumError(GridotError):
    """Relative gap is undefined because the exact optimum is zero."""


class TooLargeError(GridotError):
    """Instance exceeds the limits of the exhaustive oracle."""


class InfeasibleError(GridotError):
    """No feasible flow exists for the given supplies."""
