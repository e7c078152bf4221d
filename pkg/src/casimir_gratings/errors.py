"""Exception types shared across the package.

The CLI maps these onto exit codes: input problems exit with 2, quadrature
failures with 3 and contact configurations with 4.
"""

from __future__ import annotations


class CasimirError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class DomainError(CasimirError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class UnderdeterminedError(CasimirError, ValueError):
    """Not enough independent data to fix the requested parameters."""


class GeometryError(CasimirError, ValueError):
    """Invalid polygon, scene or grating specification."""


class ParseError(GeometryError):
    """Malformed input file. ``line`` is 1-based, or None if not line specific."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContactError(CasimirError):
    """The two bodies touch or overlap."""

    exit_code = 4

    def __init__(self, message: str, displacement: float | None = None):
        self.displacement = displacement
        super().__init__(message)


class ConvergenceError(CasimirError, RuntimeError):
    """An iterative procedure stopped before reaching its tolerance."""

    exit_code = 3

    def __init__(self, message: str, estimates: tuple[float, ...] = ()):
        self.estimates = tuple(estimates)
        if estimates:
            message = f"{message} (last estimates: {', '.join(f'{e:.10g}' for e in estimates)})"
        super().__init__(message)
