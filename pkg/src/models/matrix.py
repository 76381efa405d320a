"""
Numpy-backed matrix field type for pydantic models.
"""
from typing import Annotated, Any

import numpy as np
from pydantic import BeforeValidator, PlainSerializer


def as_matrix(value: Any) -> np.ndarray:
    """
    Coerce nested lists / arrays to a read-only 2-D float64 array.

    A scalar becomes 1x1 and a flat list becomes a single row; columns must be
    written as nested lists.
    """
    array = np.array(value, dtype=np.float64)
    if array.ndim < 2:
        array = np.atleast_2d(array)
    if array.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got {array.ndim} dimensions")
    if not np.all(np.isfinite(array)):
        raise ValueError("matrix contains non-finite entries")
    array.setflags(write=False)
    return array


def _dump(array: np.ndarray) -> list:
    return np.asarray(array).tolist()


Matrix = Annotated[np.ndarray, BeforeValidator(as_matrix), PlainSerializer(_dump, return_type=list)]

J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def diag_j(size: int) -> np.ndarray:
    """Block-diagonal commutation matrix with size/2 copies of J."""
    if size % 2:
        raise ValueError(f"commutation matrix needs an even size, got {size}")
    return np.kron(np.eye(size // 2), J)


def max_abs(*arrays: np.ndarray) -> float:
    """Largest absolute entry over all arrays (0 for empty input)."""
    values = [float(np.max(np.abs(a))) for a in arrays if np.size(a)]
    return max(values, default=0.0)


def as_tensor(value: Any) -> np.ndarray:
    """Coerce to a read-only float64 array of any rank."""
    array = np.array(value, dtype=np.float64)
    array.setflags(write=False)
    return array


Tensor = Annotated[np.ndarray, BeforeValidator(as_tensor), PlainSerializer(_dump, return_type=list)]


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)
