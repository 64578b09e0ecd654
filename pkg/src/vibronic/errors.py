"""Exception hierarchy.

Each class maps onto one CLI exit code so scripts can tell input problems
apart from numerical trouble.
"""


class VibronicError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ParseError(VibronicError):
    """Input file could not be read or does not match the schema."""

    exit_code = 3


class ValidationError(VibronicError, ValueError):
    """Input is well formed but violates a physical or dimensional constraint."""

    exit_code = 4


class NumericalError(VibronicError, ArithmeticError):
    """A computation failed or could not reach the requested accuracy."""

    exit_code = 5
