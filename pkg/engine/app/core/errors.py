"""Exception hierarchy shared by every engine module."""

from __future__ import annotations


class CornerError(Exception):
    """Base class for engine failures."""


class DomainError(CornerError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateGeometryError(DomainError):
    """Parallel rays, flat or non-convex cones, open polyhedra."""


class ConditioningError(CornerError):
    """Least-squares system is rank deficient at the working tolerance."""

    def __init__(self, message: str, condition_number: float) -> None:
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class ConvergenceError(CornerError):
    """The forward solver did not reach the requested boundary residual."""

    def __init__(
        self,
        message: str,
        residual: float,
        condition_number: float,
        residual_map: dict[int, float] | None = None,
    ) -> None:
        super().__init__(
            f"{message} (residual {residual:.3e}, condition number {condition_number:.3e})"
        )
        self.residual = residual
        self.condition_number = condition_number
        self.residual_map = residual_map or {}


class InapplicableError(CornerError):
    """A required hypothesis does not hold for the given input."""
