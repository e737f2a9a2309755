"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Raised when an array argument has the wrong shape for the operation."""


class UnsupportedActivationError(ValueError):
    """Raised when an operation requires a piecewise-linear activation."""


class StencilCrossesKinkError(RuntimeError):
    """Raised when a finite-difference stencil straddles an activation kink."""


class ConstructionError(RuntimeError):
    """Raised when a start-point construction cannot be satisfied."""
