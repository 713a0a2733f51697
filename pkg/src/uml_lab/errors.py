"""Exception types shared across the package."""


class UmlLabError(Exception):
    """Base class for all errors raised by uml_lab."""


class InvalidInput(UmlLabError, ValueError):
    pass


class DegenerateHead(UmlLabError):
    """Two classifier rows coincide, so a normalized margin is undefined."""


class DegenerateGeometry(UmlLabError):
    pass


class RankDeficientFit(UmlLabError):
    """The least-squares design does not determine the fitted coefficients."""
