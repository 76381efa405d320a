"""
Lifted Gram-matrix problem: affine expressions in block slices of Z.

Z is an m x m symmetric matrix split into square blocks of side `bs`.
Z[a, c] denotes the (a, c) block; an Expr is a sum of terms C Z[a, c] D plus
a constant, so every Expr is affine in Z.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

Gram = Callable[[int, int], np.ndarray]


@dataclass(frozen=True)
class Term:
    left: np.ndarray
    row: int
    col: int
    right: np.ndarray


class Expr:
    """Affine expression sum_k C_k Z[a_k, c_k] D_k + R."""

    __array_ufunc__ = None

    def __init__(self, shape: Tuple[int, int], terms: Sequence[Term] = (), const: Optional[np.ndarray] = None):
        self.shape = (int(shape[0]), int(shape[1]))
        self.terms: Tuple[Term, ...] = tuple(terms)
        self.const = np.zeros(self.shape) if const is None else np.asarray(const, dtype=float)
        if self.const.shape != self.shape:
            raise ValueError(f"constant shape {self.const.shape} != {self.shape}")
        for t in self.terms:
            if t.left.shape[0] != self.shape[0] or t.right.shape[1] != self.shape[1]:
                raise ValueError(f"term shape mismatch in expression of shape {self.shape}")

    # construction

    @classmethod
    def slice(cls, row: int, col: int, bs: int, rows: Optional[int] = None, cols: Optional[int] = None) -> "Expr":
        """Top-left rows x cols part of Z[row, col]."""
        rows = bs if rows is None else rows
        cols = bs if cols is None else cols
        eye = np.eye(bs)
        return cls((rows, cols), [Term(eye[:rows], row, col, eye[:, :cols])])

    @classmethod
    def constant(cls, value: np.ndarray) -> "Expr":
        value = np.atleast_2d(np.asarray(value, dtype=float))
        return cls(value.shape, const=value)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Expr":
        return cls((rows, cols))

    # algebra

    def __add__(self, other: "Expr") -> "Expr":
        if isinstance(other, np.ndarray):
            other = Expr.constant(other)
        if other.shape != self.shape:
            raise ValueError(f"cannot add {self.shape} and {other.shape}")
        return Expr(self.shape, self.terms + other.terms, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return -1.0 * self

    def __sub__(self, other: "Expr") -> "Expr":
        return self + (-other if isinstance(other, Expr) else -np.asarray(other))

    def __rsub__(self, other: np.ndarray) -> "Expr":
        return Expr.constant(other) - self

    def __mul__(self, scalar: float) -> "Expr":
        scalar = float(scalar)
        return Expr(
            self.shape,
            [Term(scalar * t.left, t.row, t.col, t.right) for t in self.terms],
            scalar * self.const,
        )

    __rmul__ = __mul__

    def __matmul__(self, right: np.ndarray) -> "Expr":
        right = np.atleast_2d(np.asarray(right, dtype=float))
        return Expr(
            (self.shape[0], right.shape[1]),
            [Term(t.left, t.row, t.col, t.right @ right) for t in self.terms],
            self.const @ right,
        )

    def __rmatmul__(self, left: np.ndarray) -> "Expr":
        left = np.atleast_2d(np.asarray(left, dtype=float))
        return Expr(
            (left.shape[0], self.shape[1]),
            [Term(left @ t.left, t.row, t.col, t.right) for t in self.terms],
            left @ self.const,
        )

    @property
    def T(self) -> "Expr":
        # (C Z[a,c] D)^T = D^T Z[c,a] C^T for symmetric Z
        return Expr(
            (self.shape[1], self.shape[0]),
            [Term(t.right.T, t.col, t.row, t.left.T) for t in self.terms],
            self.const.T,
        )

    def place(self, rows: int, cols: int, r0: int = 0, c0: int = 0) -> "Expr":
        """Embed into a rows x cols zero expression at offset (r0, c0)."""
        p, q = self.shape
        lift = np.zeros((rows, p))
        lift[r0:r0 + p, :] = np.eye(p)
        spread = np.zeros((q, cols))
        spread[:, c0:c0 + q] = np.eye(q)
        return lift @ self @ spread

    @staticmethod
    def hstack(parts: Sequence["Expr"]) -> "Expr":
        return Expr.block([list(parts)])

    @staticmethod
    def block(grid: Sequence[Sequence[Optional["Expr"]]]) -> "Expr":
        """Block matrix from a grid of expressions (None is a zero block)."""
        heights = [next(e.shape[0] for e in row if e is not None) for row in grid]
        widths = [
            next(grid[i][j].shape[1] for i in range(len(grid)) if grid[i][j] is not None)
            for j in range(len(grid[0]))
        ]
        total = Expr.zeros(sum(heights), sum(widths))
        r0 = 0
        for i, row in enumerate(grid):
            c0 = 0
            for j, item in enumerate(row):
                if item is not None:
                    if item.shape != (heights[i], widths[j]):
                        raise ValueError(f"block ({i},{j}) has shape {item.shape}, expected {(heights[i], widths[j])}")
                    total = total + item.place(total.shape[0], total.shape[1], r0, c0)
                c0 += widths[j]
            r0 += heights[i]
        return total

    # evaluation

    def evaluate(self, gram: Gram) -> np.ndarray:
        """Numeric value given a function returning Z[a, c]."""
        value = self.const.copy()
        for t in self.terms:
            value += t.left @ gram(t.row, t.col) @ t.right
        return value

    def operator(self, bs: int, n_blocks: int) -> Tuple[sp.csr_matrix, np.ndarray]:
        """Sparse map on row-major vec(Z) and the flattened constant."""
        m = bs * n_blocks
        p, q = self.shape
        total = sp.csr_matrix((p * q, m * m))
        for t in self.terms:
            left = np.zeros((p, m))
            left[:, t.row * bs:(t.row + 1) * bs] = t.left
            right_t = np.zeros((q, m))
            right_t[:, t.col * bs:(t.col + 1) * bs] = t.right.T
            total = total + sp.kron(sp.csr_matrix(left), sp.csr_matrix(right_t), format="csr")
        return total, self.const.ravel()


class _Model(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class EqualityGroup(_Model):
    """expr(Z) = 0."""
    name: str
    expr: Expr


class InequalityBlock(_Model):
    """expr(Z) <= bound * I (nsd) or expr(Z) >= bound * I (psd); expr is symmetric."""
    name: str
    expr: Expr
    sense: Literal["nsd", "psd"]
    bound: float


class BlockShape(_Model):
    name: str
    index: int
    rows: int
    cols: int
    kind: Literal["identity", "primitive", "linear", "product"]
    factors: Optional[Tuple[int, int]] = None
    definition: Optional[Expr] = None


class LiftedProblem(_Model):
    """Constraint system over the Gram matrix Z = V V^T."""
    case: Literal["Case1", "Case2"]
    bs: int = Field(..., gt=0, description="Block side: n (Case 1) or n_hat (Case 2)")
    n_blocks: int
    rank: int
    blocks: List[BlockShape]
    equalities: List[EqualityGroup]
    inequalities: List[InequalityBlock]
    trace: Expr
    gamma: float = Field(..., gt=0.0)
    trace_floor: float
    epsilon: float
    n: int
    n_hat: int
    n_u: int
    n_ym: int

    @property
    def m(self) -> int:
        return self.bs * self.n_blocks

    @property
    def index(self) -> Dict[str, int]:
        return {b.name: b.index for b in self.blocks}

    def block(self, name: str) -> BlockShape:
        return self.blocks[self.index[name]]

    def gram(self, Z: np.ndarray) -> Gram:
        bs = self.bs

        def _slice(a: int, c: int) -> np.ndarray:
            return Z[a * bs:(a + 1) * bs, c * bs:(c + 1) * bs]

        return _slice

    def equality_residuals(self, Z: np.ndarray) -> Dict[str, float]:
        gram = self.gram(Z)
        return {g.name: float(np.max(np.abs(g.expr.evaluate(gram)), initial=0.0)) for g in self.equalities}


class LiftPrimitives(_Model):
    """Unlifted unknowns; X1 and M2 are the first block column of P^-1."""
    X1: np.ndarray
    Y1: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    N: np.ndarray
    L: np.ndarray
    K: np.ndarray
    Y2: np.ndarray

    @property
    def P(self) -> np.ndarray:
        return np.block([[self.Y1, self.N], [self.N.T, self.Y2]])

    @property
    def Pi(self) -> np.ndarray:
        """Congruence factor [[X1, M1], [M2, 0]]."""
        zero = np.zeros((self.M2.shape[0], self.M1.shape[1]))
        return np.block([[self.X1, self.M1], [self.M2, zero]])
