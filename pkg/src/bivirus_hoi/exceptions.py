"""Exception hierarchy.

Assumption violations of a model are reported as data by ``validate_model``;
everything here signals a failed operation.
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Optional, Sequence

if TYPE_CHECKING:  # pragma: no cover
    import numpy as np

    from bivirus_hoi.domain.dynamics import Trajectory


class BivirusError(Exception):
    """Base class for every error raised by this package."""


class ModelShapeError(BivirusError, ValueError):
    """Parameter arrays have the wrong shape."""


class DimensionMismatchError(BivirusError, ValueError):
    """A state does not match the node count of a model."""

    def __init__(self, expected: int, got: int, what: str = "state"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} has dimension {got}, model has n={expected}")


class DomainError(BivirusError, ValueError):
    """A state lies outside the set D where membership is required."""


class OrderViolationError(DomainError):
    """An ordered pair does not satisfy the strict cone order."""


class SpectralInputError(BivirusError, ValueError):
    """Matrix input violates the structural precondition of a spectral routine."""


class SpectralConsistencyError(BivirusError):
    """Two equivalent spectral quantities disagree beyond tolerance.

    This is a numerical failure, not a property of the model.
    """

    def __init__(self, abscissa: float, radius: float, tol: float):
        self.abscissa = abscissa
        self.radius = radius
        super().__init__(
            f"sign of s(M)={abscissa:.3e} inconsistent with rho={radius:.12g} vs 1 (tol {tol:g})"
        )


class SolverError(BivirusError):
    """Base class for equilibrium solver failures."""


class EquilibriumNotFoundError(SolverError):
    """Iteration did not reach the residual tolerance; carries the last iterate."""

    def __init__(self, message: str, last_iterate: "np.ndarray", residual: float, iterations: int):
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")


class IntegrationError(BivirusError):
    """Integration aborted; carries the trajectory recorded so far."""

    def __init__(self, message: str, trajectory: Optional["Trajectory"] = None):
        self.trajectory = trajectory
        super().__init__(message)


class LeftDomainError(IntegrationError):
    """An accepted step left D by more than the hard tolerance."""


class StepSizeUnderflowError(IntegrationError):
    """The step size controller could not make progress."""


class ScenarioError(BivirusError):
    """Base class for scenario configuration errors."""


class ScenarioParseError(ScenarioError):
    """Configuration text is not well-formed JSON."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"parse error at line {line}, column {column}: {message}")


class ScenarioValidationError(ScenarioError):
    """Configuration is well-formed but invalid; lists every issue found."""

    def __init__(self, issues: Sequence[str]):
        self.issues = list(issues)
        joined = "\n  - ".join(self.issues)
        super().__init__(f"{len(self.issues)} validation issue(s):\n  - {joined}")


class UnknownScenarioError(ScenarioError, KeyError):
    """No built-in scenario with the requested name."""

    def __init__(self, name: str, known: Sequence[str]):
        self.name = name
        self.known = list(known)
        super().__init__(f"unknown built-in scenario {name!r}; known: {', '.join(self.known)}")

    def __str__(self) -> str:
        return self.args[0]


class InvalidParameterError(BivirusError, ValueError):
    """A scalar parameter is outside its admissible range."""
