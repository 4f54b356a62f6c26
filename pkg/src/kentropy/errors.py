"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An input lies outside the domain where an operation is defined."""


class ComputationError(RuntimeError):
    """A numerical procedure failed to reach its requested accuracy.

    Attributes:
        residual: best error estimate achieved before giving up.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual
