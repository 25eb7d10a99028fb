"""Shared exception and warning types."""


class NumericError(RuntimeError):
    """A numerical routine failed its accuracy or convergence contract."""


class NumericWarning(UserWarning):
    """A numerical diagnostic exceeded its expected tolerance."""
