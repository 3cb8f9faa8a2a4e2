"""Exception hierarchy shared by all stages.

The CLI maps :class:`ConfigError` to exit code 2 and
:class:`NumericalError` to exit code 3.
"""


class SurfEprError(Exception):
    """Base class for package errors."""


class ConfigError(SurfEprError, ValueError):
    """Invalid input: bad parameters, schema violations, inconsistent layouts."""


class NumericalError(SurfEprError, ArithmeticError):
    """A numerical stage failed: singular systems, non-convergence, table misses."""


class ConvergenceError(NumericalError):
    """Iterative refinement did not converge.

    Attributes
    ----------
    estimates : tuple
        The last two estimates produced before giving up.
    """

    def __init__(self, msg, estimates=()):
        super().__init__(msg)
        self.estimates = tuple(estimates)


class TableRangeError(NumericalError):
    """A Green's table was queried beyond its radial range."""
