"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DemixError(Exception):
    exit_code = 1


class ConfigError(DemixError, ValueError):
    """Invalid dimensions, divisibility violations, unknown keys or names."""

    exit_code = 2


class DomainError(DemixError, ValueError):
    """Input outside the mathematical domain of an operation."""

    exit_code = 4


class UnsupportedLinkError(ConfigError):
    """Link function incompatible with the requested solver or stage."""


class NumericalError(DemixError, ArithmeticError):
    """Degenerate curvature, negative radicand, non-finite iterates."""

    exit_code = 4
