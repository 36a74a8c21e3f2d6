"""Exception types shared across the package."""

from __future__ import annotations


class DynrmatError(Exception):
    """Base class for all package-specific errors."""


class PoleError(DynrmatError):
    """A coefficient was evaluated at (or too close to) one of its poles."""


class ParameterError(DynrmatError):
    """Structurally invalid input data (partition, constants, config file)."""


class NotInFamilyError(DynrmatError):
    """The analysed matrix is inconsistent with the classified solution family."""


class AmbiguityError(DynrmatError):
    """Sampled data is not decisive (e.g. an entry vanishes only at some samples).

    Callers should retry with more samples or different sample points.
    """
