"""
Exception hierarchy for the synthesis pipeline.
"""
from typing import Any, Optional, Sequence


class QlftError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(QlftError):
    """Malformed or inconsistent run configuration / input files."""


class DimensionMismatchError(QlftError):
    """A matrix does not have the shape implied by the declared dimensions."""

    def __init__(self, matrix: str, expected: Sequence[int], actual: Sequence[int]):
        self.matrix = matrix
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(
            f"{matrix}: expected shape {self.expected}, got {self.actual}"
        )


class StructureError(QlftError):
    """A structural precondition (permutation, commuting block, parity) fails."""


class CertificationError(QlftError):
    """A certificate precondition fails (e.g. S not positive definite, c <= 0)."""


class FaultSpecError(QlftError):
    """A fault signal specification is malformed or unbounded."""


class ProjectionDivergedError(QlftError):
    """Alternating projections produced NaN/inf; carries the last iterate."""

    def __init__(self, message: str, iterate: Optional[Any] = None, iteration: int = -1):
        self.iterate = iterate
        self.iteration = iteration
        super().__init__(message)


class NoFeasibleRestart(QlftError):
    """A batch of solver restarts ended without an accepted solution."""


class SimulationDivergedError(QlftError):
    """Moment propagation left the finite range."""

    def __init__(self, message: str, t: float, last_state: Optional[Any] = None):
        self.t = t
        self.last_state = last_state
        super().__init__(f"{message} (t={t:.6g})")
