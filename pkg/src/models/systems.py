"""
Data models for the augmented, reduced, error and closed-loop systems.
"""
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .matrix import Matrix
from ..utils.errors import DimensionMismatchError


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class AugmentedSystem(_Frozen):
    """State eta = [x~; f] driven by h = df/dt."""
    A: Matrix
    B_w: Matrix
    B_u: Matrix
    B_h: Matrix
    C: Matrix


class ReducedSystem(_Frozen):
    """Estimation target xi = [x~_o; f] of size n_hat = n_o + n_f."""
    n_o: int = Field(..., gt=0)
    n_f: int = Field(..., gt=0)
    A: Matrix
    A_uo: Matrix
    B_w: Matrix
    B_u: Matrix
    B_h: Matrix
    C: Matrix

    @property
    def n_hat(self) -> int:
        return self.n_o + self.n_f


class Gains(_Frozen):
    """Innovation gain L and feedback K = [K_x K_f] acting on xi_hat."""
    L: Matrix
    K: Matrix
    n_o: int = Field(..., gt=0)

    @model_validator(mode="after")
    def _check_partition(self) -> "Gains":
        n_hat = self.L.shape[0]
        if self.K.shape[1] != n_hat:
            raise DimensionMismatchError("K", (self.K.shape[0], n_hat), self.K.shape)
        if not 0 < self.n_o < n_hat:
            raise DimensionMismatchError("K_x", (self.K.shape[0], n_hat - 1), (self.K.shape[0], self.n_o))
        return self

    @property
    def n_hat(self) -> int:
        return self.L.shape[0]

    @property
    def K_x(self) -> np.ndarray:
        return self.K[:, : self.n_o]

    @property
    def K_f(self) -> np.ndarray:
        return self.K[:, self.n_o:]

    def vector(self) -> np.ndarray:
        """Flattened (L, K) for derivative-free search."""
        return np.concatenate([self.L.ravel(), self.K.ravel()])

    def with_vector(self, theta: np.ndarray) -> "Gains":
        split = self.L.size
        return Gains(
            L=np.reshape(theta[:split], self.L.shape),
            K=np.reshape(theta[split:], self.K.shape),
            n_o=self.n_o,
        )


class ErrorSystem(_Frozen):
    """de = A_e e dt + E x~_uo dt + B_e [dw; dv] + B_h h dt."""
    A_e: Matrix
    B_e: Matrix
    E: Matrix


class ClosedLoop(_Frozen):
    """
    Interconnection in z = (x~, e).

    The 2x2 form is stored; block3 exposes the (x~_uo, x~_o, e) partition.
    """
    n: int = Field(..., gt=0)
    n_o: int = Field(..., gt=0)
    n_f: int = Field(..., gt=0)
    A: Matrix
    B_w: Matrix
    B_f: Matrix
    B_h: Matrix

    @property
    def n_hat(self) -> int:
        return self.n_o + self.n_f

    @property
    def size(self) -> int:
        return self.n + self.n_hat

    def _edges(self) -> Tuple[int, int, int, int]:
        n_uo = self.n - self.n_o
        return 0, n_uo, self.n, self.size

    def block3(self, matrix: np.ndarray, i: int, j: int) -> np.ndarray:
        """Sub-block (i, j) of a size x size matrix, i, j in {0, 1, 2}."""
        edges = self._edges()
        return matrix[edges[i]:edges[i + 1], edges[j]:edges[j + 1]]

    def rows3(self, matrix: np.ndarray, i: int) -> np.ndarray:
        edges = self._edges()
        return matrix[edges[i]:edges[i + 1]]

    def B_bar(self, alpha: float, beta: float) -> np.ndarray:
        """[sqrt(2) alpha B_f, sqrt(2) beta B_h, B_w]."""
        root2 = np.sqrt(2.0)
        return np.hstack([root2 * alpha * self.B_f, root2 * beta * self.B_h, self.B_w])

    @property
    def spectral_abscissa(self) -> float:
        return float(np.max(np.linalg.eigvals(self.A).real))

    def is_hurwitz(self, shift: float = 0.0) -> bool:
        """True when every eigenvalue of A + shift*I has negative real part."""
        return self.spectral_abscissa + shift < 0.0
