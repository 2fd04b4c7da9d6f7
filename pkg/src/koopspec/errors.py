"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: argument problems to 2, numerical
breakdowns to 3, resource caps to 4.
"""


class KoopspecError(Exception):
    """Base class for library errors."""


class ArgumentError(KoopspecError, ValueError):
    """Invalid argument or configuration."""


class DomainError(ArgumentError):
    """A state lies outside the domain of a dynamical system."""


class NumericError(KoopspecError, ArithmeticError):
    """A numerical computation broke down (singular solve, overflow, ...)."""


class ResourceError(KoopspecError):
    """A requested size exceeds a configured cap."""
