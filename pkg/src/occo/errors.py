"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: config errors -> 1, invariant
violations -> 2, I/O failures -> 3.
"""


class OccoError(Exception):
    """Base class for all package errors."""


class InputError(OccoError, ValueError):
    """Malformed or dimensionally inconsistent input."""


class DomainError(OccoError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ProtocolError(OccoError, RuntimeError):
    """Round-loop interface used out of order (e.g. observe before decide)."""


class InvariantViolation(OccoError, RuntimeError):
    """A quantity the theory guarantees (e.g. residual nonnegativity) failed
    beyond numerical tolerance; signals solver inaccuracy, not bad user input."""


class ConfigError(OccoError, ValueError):
    """Invalid run configuration (CLI flags or sweep file)."""
