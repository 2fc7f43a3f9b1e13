"""Exception hierarchy shared by the library and the command line."""


class C3LError(Exception):
    """Base class for all errors raised by this package."""


class InputError(C3LError, ValueError):
    """Malformed or inconsistent user input (shapes, ranges, files)."""


class DegenerateClusterError(C3LError, ArithmeticError):
    """A cluster cannot be fitted: too few rows or zero variance."""


class OptimizationError(C3LError, RuntimeError):
    """Every restart of the optimizer failed."""
