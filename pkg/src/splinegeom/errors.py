"""Exception hierarchy shared by every module."""


class GeometryError(ValueError):
    """Base class for all library errors."""

    exit_code = 2
    kind = "error"


class StructuralError(GeometryError):
    """Inconsistent shapes or malformed network description."""

    kind = "structural"


class InputError(GeometryError):
    """Bad query point or dataset (non-finite, wrong dimension, outside domain)."""

    kind = "input"


class CapacityError(GeometryError):
    """An exhaustive enumeration would exceed its configured cap."""

    exit_code = 3
    kind = "capacity"


class UnsupportedError(GeometryError):
    """Operation not defined for this activation / piece count."""

    kind = "unsupported"


class DegenerateError(GeometryError):
    """Zero-length normal or singular closed form."""

    kind = "degenerate"


class PreconditionError(GeometryError):
    """A structural precondition of a closed-form result does not hold."""

    kind = "precondition"
