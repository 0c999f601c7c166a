"""Exception types shared across the toolkit."""


class ScaleInvError(Exception):
    """Base class for toolkit errors."""


class InputError(ScaleInvError, ValueError):
    """Input data does not match the declared layout (e.g. wrong file size)."""


class FormatError(InputError):
    """Malformed or unsupported file format."""


class GeometryError(ScaleInvError, ValueError):
    """A patch, stamp or lattice does not fit the requested geometry."""


class DegenerateInputError(ScaleInvError, ValueError):
    """Input carries no usable signal (all zeros, zero variance, ...)."""


class InsufficientDataError(ScaleInvError, ValueError):
    """Too few usable points for a fit."""
