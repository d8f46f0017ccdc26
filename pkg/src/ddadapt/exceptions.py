"""
Exceptions for ddadapt.

This module defines custom exception classes for invalid input and
numerical failures, so callers can tell a bad configuration apart from a
solve that went wrong.
"""

from typing import Any, Dict, List, Optional, Sequence


class DDAdaptError(Exception):
    """
    Base exception for all ddadapt errors.

    All custom exceptions inherit from this class, allowing you to catch
    every package error with a single except clause.

    Attributes:
        message: Human-readable error description
        context: Extra diagnostic values (indices, residuals, sizes)
        exit_code: Process exit code the CLI uses for this error

    Example:
        >>> try:
        ...     grid = build_grid(Box(0, 240, 0, 60), 1, 13)
        ... except DDAdaptError as e:
        ...     print(f"Error: {e.message}")
    """

    exit_code = 1

    def __init__(
        self,
        message: str = "An error occurred",
        context: Optional[Dict[str, Any]] = None,
    ) -> None:
        self.message = message
        self.context = context or {}
        super().__init__(message)

    def __str__(self) -> str:
        if self.context:
            details = ", ".join(f"{k}={v}" for k, v in self.context.items())
            return f"{self.message} ({details})"
        return self.message

    def __repr__(self) -> str:
        name = self.__class__.__name__
        return f"{name}(message='{self.message}', context={self.context})"


class ValidationError(DDAdaptError):
    """
    Raised when an argument violates an operation's preconditions.

    Common causes:
        - Non-positive domain extents or fewer than 2 nodes per axis
        - Partition counts that do not tile the grid
        - Non-positive diffusion coefficients
        - Too few samples for a density or Monte-Carlo estimate

    Example:
        >>> try:
        ...     lognormal_params(0.0, 2.5)
        ... except ValidationError as e:
        ...     print(f"Invalid input: {e.message}")
    """

    exit_code = 2

    def __init__(
        self,
        message: str = "Validation failed",
        context: Optional[Dict[str, Any]] = None,
    ) -> None:
        super().__init__(message, context)


class DimensionMismatchError(ValidationError):
    """
    Raised when a vector, field, or basis has the wrong size.

    Attributes:
        expected: Size the operation required
        actual: Size it received
    """

    def __init__(
        self,
        message: str = "Dimension mismatch",
        expected: Optional[int] = None,
        actual: Optional[int] = None,
    ) -> None:
        super().__init__(message, {"expected": expected, "actual": actual})
        self.expected = expected
        self.actual = actual


class ConfigError(DDAdaptError):
    """
    Raised when a run configuration is invalid.

    Every problem found in one pass is collected so the user can fix the
    file in one go.

    Attributes:
        errors: One line per problem

    Example:
        >>> try:
        ...     RunConfig.from_file("bench.ini")
        ... except ConfigError as e:
        ...     for line in e.errors:
        ...         print(line)
    """

    exit_code = 2

    def __init__(
        self,
        message: str = "Invalid configuration",
        errors: Optional[Sequence[str]] = None,
    ) -> None:
        super().__init__(message)
        self.errors: List[str] = list(errors or [])

    def __str__(self) -> str:
        if self.errors:
            return self.message + ":\n  " + "\n  ".join(self.errors)
        return self.message


class NumericalError(DDAdaptError):
    """
    Base class for failures of a numerical procedure.

    Raised directly for broken invariants such as a non-orthogonal
    isometry; more specific subclasses exist for solver and rank issues.
    """

    exit_code = 3

    def __init__(
        self,
        message: str = "Numerical failure",
        context: Optional[Dict[str, Any]] = None,
    ) -> None:
        super().__init__(message, context)


class SolverError(NumericalError):
    """
    Raised when a linear solve misses its residual target.

    Attributes:
        residual: Relative residual ||Au - b|| / ||b|| that was reached
    """

    def __init__(
        self,
        message: str = "Linear solve did not converge",
        residual: Optional[float] = None,
    ) -> None:
        super().__init__(message, {"residual": residual})
        self.residual = residual


class SingularSystemError(NumericalError):
    """Raised when the assembled system has no Dirichlet node to pin it."""

    def __init__(
        self,
        message: str = "System is singular: no Dirichlet node",
        context: Optional[Dict[str, Any]] = None,
    ) -> None:
        super().__init__(message, context)


class RankError(NumericalError):
    """
    Raised when more modes are requested than the spectrum supports.

    Attributes:
        requested: Number of modes asked for
        rank: Number of eigenvalues above the relative tolerance
    """

    def __init__(
        self,
        message: str = "Requested dimension exceeds numerical rank",
        requested: Optional[int] = None,
        rank: Optional[int] = None,
    ) -> None:
        super().__init__(message, {"requested": requested, "rank": rank})
        self.requested = requested
        self.rank = rank


class CollocationError(NumericalError):
    """
    Raised when a deterministic solve fails inside a sampling loop.

    Attributes:
        node_index: Collocation node or Monte-Carlo sample that failed
        stage: Pipeline stage the loop belonged to
    """

    def __init__(
        self,
        message: str = "Deterministic solve failed",
        node_index: Optional[int] = None,
        stage: Optional[str] = None,
    ) -> None:
        super().__init__(message, {"node_index": node_index, "stage": stage})
        self.node_index = node_index
        self.stage = stage


class ZeroNormError(NumericalError):
    """Raised when a relative error is requested against a zero reference."""

    def __init__(
        self,
        message: str = "Reference field has zero norm",
        context: Optional[Dict[str, Any]] = None,
    ) -> None:
        super().__init__(message, context)
