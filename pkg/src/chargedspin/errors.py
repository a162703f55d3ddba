"""Exception hierarchy shared by all chargedspin modules."""


class ChargedSpinError(Exception):
    """Base class for all library errors."""


class InvalidDimensionError(ChargedSpinError, ValueError):
    """Spatial dimension outside the supported range."""


class DimensionTooLargeError(ChargedSpinError, ValueError):
    """Spinor fiber dimension would exceed the configured cap."""


class ShapeError(ChargedSpinError, ValueError):
    """Array arguments with incompatible shapes."""


class GeometryError(ChargedSpinError, ValueError):
    """Degenerate or invalid geometric input (e.g. non positive definite metric)."""


class StencilError(ChargedSpinError, ValueError):
    """A requested evaluation point has no valid finite-difference stencil."""


class QuadratureError(ChargedSpinError, ValueError):
    """Invalid surface quadrature request (resolution, placement)."""


class ExtrapolationError(ChargedSpinError, ValueError):
    """Radius ladder unsuitable for extrapolation."""


class SolverError(ChargedSpinError, RuntimeError):
    """Iterative solve failed to reach the requested tolerance."""


class FormatError(ChargedSpinError, ValueError):
    """Corrupt or incompatible on-disk manifest / field file."""
