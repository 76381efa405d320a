"""
Data models for linear quantum stochastic plants.
"""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .matrix import Matrix, diag_j
from ..utils.errors import DimensionMismatchError, StructureError


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


def _expect(name: str, array: np.ndarray, rows: int, cols: int) -> None:
    if array.shape != (rows, cols):
        raise DimensionMismatchError(name, (rows, cols), array.shape)


class QuantumPlant(_Frozen):
    """Plant dx = Ax dt + B_w dw + B_u dy_u + B_f f dt, dy = Cx dt + D dw."""
    n: int = Field(..., gt=0)
    n_w: int = Field(..., gt=0)
    n_u: int = Field(..., gt=0)
    n_f: int = Field(..., gt=0)
    n_y: int = Field(..., gt=0)
    A: Matrix
    B_w: Matrix
    B_u: Matrix
    B_f: Matrix
    C: Matrix
    D: Matrix

    @model_validator(mode="after")
    def _check_dimensions(self) -> "QuantumPlant":
        for name in ("n", "n_w", "n_u", "n_y"):
            if getattr(self, name) % 2:
                raise StructureError(f"{name} must be even, got {getattr(self, name)}")
        _expect("A", self.A, self.n, self.n)
        _expect("B_w", self.B_w, self.n, self.n_w)
        _expect("B_u", self.B_u, self.n, self.n_u)
        _expect("B_f", self.B_f, self.n, self.n_f)
        _expect("C", self.C, self.n_y, self.n)
        _expect("D", self.D, self.n_y, self.n_w)
        return self

    @property
    def B(self) -> np.ndarray:
        """Combined input matrix [B_w B_u] over the noise channels [w; v]."""
        return np.hstack([self.B_w, self.B_u])

    @property
    def D_padded(self) -> np.ndarray:
        """[D 0]: the output sees w but not the controller noise v."""
        return np.hstack([self.D, np.zeros((self.n_y, self.n_u))])


class CommutationStructure(_Frozen):
    """Theta, Theta_w (combined [w; v]) and Theta_y in the J-block convention."""
    theta: Matrix
    theta_w: Matrix
    theta_y: Matrix

    @model_validator(mode="after")
    def _check_j_blocks(self) -> "CommutationStructure":
        for name in ("theta", "theta_w", "theta_y"):
            theta = getattr(self, name)
            rows, cols = theta.shape
            if rows != cols or rows % 2:
                raise StructureError(f"{name} must be square with even size, got {theta.shape}")
            if not np.array_equal(theta, -theta.T):
                raise StructureError(f"{name} is not antisymmetric")
            if not np.array_equal(theta, diag_j(rows)):
                raise StructureError(f"{name} is not block-diagonal in J = [[0, 1], [-1, 0]]")
        return self

    @classmethod
    def for_plant(cls, plant: QuantumPlant) -> "CommutationStructure":
        return cls(
            theta=diag_j(plant.n),
            theta_w=diag_j(plant.n_w + plant.n_u),
            theta_y=diag_j(plant.n_y),
        )


class MeasurementMatrix(_Frozen):
    """Homodyne measurement y_m = G y."""
    G: Matrix

    @property
    def n_ym(self) -> int:
        return self.G.shape[0]


class FaultBounds(_Frozen):
    """Sup-norm bounds on f (alpha) and df/dt (beta)."""
    alpha: float = Field(..., ge=0.0, allow_inf_nan=False)
    beta: float = Field(..., ge=0.0, allow_inf_nan=False)
    jumps: List[float] = Field(default_factory=list, description="Jump sizes excluded from beta")
    jump_times: List[float] = Field(default_factory=list)

    @property
    def declared(self) -> bool:
        """A fault is declared when both bounds are positive."""
        return self.alpha > 0 and self.beta > 0


class TransformedPlant(_Frozen):
    """Plant after the permutation x~ = T x = [x~_uo; x~_o]."""
    plant: QuantumPlant
    T: Matrix
    n_o: int = Field(..., gt=0)
    A: Matrix
    B_w: Matrix
    B_u: Matrix
    B_f: Matrix
    C: Matrix
    D: Matrix

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def n_uo(self) -> int:
        return self.plant.n - self.n_o

    @property
    def n_hat(self) -> int:
        return self.n_o + self.plant.n_f

    def _rows(self, m: np.ndarray, part: int) -> np.ndarray:
        return m[: self.n_uo] if part == 1 else m[self.n_uo:]

    @property
    def A11(self) -> np.ndarray:
        return self.A[: self.n_uo, : self.n_uo]

    @property
    def A12(self) -> np.ndarray:
        return self.A[: self.n_uo, self.n_uo:]

    @property
    def A21(self) -> np.ndarray:
        return self.A[self.n_uo:, : self.n_uo]

    @property
    def A22(self) -> np.ndarray:
        return self.A[self.n_uo:, self.n_uo:]

    @property
    def B_w1(self) -> np.ndarray:
        return self._rows(self.B_w, 1)

    @property
    def B_w2(self) -> np.ndarray:
        return self._rows(self.B_w, 2)

    @property
    def B_u1(self) -> np.ndarray:
        return self._rows(self.B_u, 1)

    @property
    def B_u2(self) -> np.ndarray:
        return self._rows(self.B_u, 2)

    @property
    def B_f1(self) -> np.ndarray:
        return self._rows(self.B_f, 1)

    @property
    def B_f2(self) -> np.ndarray:
        return self._rows(self.B_f, 2)

    @property
    def C1(self) -> np.ndarray:
        return self.C[:, : self.n_uo]

    @property
    def C2(self) -> np.ndarray:
        return self.C[:, self.n_uo:]


class ResidualCheck(_Frozen):
    """One structural residual with its verdict."""
    name: str
    residual: Matrix
    max_abs: float
    tolerance: float
    passed: bool


class RealizabilityReport(_Frozen):
    """Conditions (i)-(iii) evaluated on a plant."""
    conditions: List[ResidualCheck]
    override_condition_ii: bool = False

    def condition(self, name: str) -> ResidualCheck:
        return next(c for c in self.conditions if c.name == name)

    @property
    def passed(self) -> bool:
        return all(
            c.passed or (self.override_condition_ii and c.name == "ii")
            for c in self.conditions
        )


class MeasurementReport(_Frozen):
    """G Theta_y G^T = 0 and rank(G) <= n_y/2."""
    residual: Matrix
    max_abs: float
    rank: int
    rank_bound: int
    annihilates: bool
    rank_ok: bool

    @property
    def passed(self) -> bool:
        return self.annihilates and self.rank_ok


class PlantSpec(_Frozen):
    """Everything read from a plant specification file."""
    plant: QuantumPlant
    measurement: MeasurementMatrix
    T: Optional[Matrix] = None
    n_o: int = Field(..., gt=0)
    bounds: FaultBounds
