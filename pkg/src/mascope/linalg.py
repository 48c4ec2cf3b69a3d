"""Dense float64 vector/matrix helpers.

Vectors and matrices are plain read-only numpy arrays; the constructors here
only enforce shape and finiteness.
"""

import numpy as np

from .errors import DimensionError, SingularMatrixError


def as_vector(values):
    """Return a read-only 1-D float64 copy of ``values``; rejects NaN/Inf."""
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector entries must be finite")
    arr.setflags(write=False)
    return arr


def as_matrix(values):
    arr = np.array(values, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    arr.setflags(write=False)
    return arr


def _check_same_length(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")


def dot(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_same_length(a, b)
    return float(np.dot(a, b))


def norm2(a):
    return float(np.sqrt(np.dot(a, a)))


def norm1(a):
    return float(np.sum(np.abs(a)))


def matvec(M, x):
    M = np.asarray(M, dtype=float)
    x = np.asarray(x, dtype=float)
    if M.ndim != 2 or x.ndim != 1 or M.shape[1] != x.shape[0]:
        raise DimensionError(f"cannot multiply {M.shape} by {x.shape}")
    return M @ x


def solve_linear(M, b):
    """Solve ``M x = b`` by Gaussian elimination with partial pivoting.

    Raises SingularMatrixError when a pivot falls below ``1e-12 * max|M|``.
    """
    A = np.array(M, dtype=float)
    rhs = np.array(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"matrix must be square, got {A.shape}")
    n = A.shape[0]
    if rhs.shape != (n,):
        raise DimensionError(f"rhs has shape {rhs.shape}, expected ({n},)")
    scale = np.max(np.abs(A)) if A.size else 0.0
    threshold = 1e-12 * scale
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(A[col:, col])))
        if scale == 0.0 or abs(A[pivot, col]) <= threshold:
            raise SingularMatrixError(f"pivot {A[pivot, col]:.3e} in column {col} is below tolerance")
        if pivot != col:
            A[[col, pivot]] = A[[pivot, col]]
            rhs[[col, pivot]] = rhs[[pivot, col]]
        factors = A[col + 1:, col] / A[col, col]
        A[col + 1:, col:] -= np.outer(factors, A[col, col:])
        rhs[col + 1:] -= factors * rhs[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (rhs[row] - A[row, row + 1:] @ x[row + 1:]) / A[row, row]
    return x
