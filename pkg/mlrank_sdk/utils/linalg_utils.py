"""
Dense linear algebra helpers for mlrank

Thin, validated wrappers over scipy.linalg used by the formulation,
tracker and classification code.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from ..exceptions import ConvergenceFailure, SingularMatrix

logger = logging.getLogger(__name__)

# singular values with sigma_k / sigma_1 above this count toward the rank
RANK_TOLERANCE = 1e-8
PIVOT_TOLERANCE = 1e-14


@dataclass
class SvdResult:
    """Singular value decomposition A = left @ diag(singular_values) @ right"""
    singular_values: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """Rebuild the (possibly rectangular) matrix from its factors"""
        k = len(self.singular_values)
        return (self.left[:, :k] * self.singular_values) @ self.right[:k, :]

    def rank(self, rel_tol: float = RANK_TOLERANCE) -> int:
        """Numerical rank using a relative threshold on the singular values"""
        if len(self.singular_values) == 0 or self.singular_values[0] == 0.0:
            return 0
        return int(np.sum(self.singular_values > rel_tol * self.singular_values[0]))


def as_complex_matrix(values, rows: Optional[int] = None, cols: Optional[int] = None) -> np.ndarray:
    """
    Validate and convert input into a 2-d complex array

    Args:
        values: anything numpy can turn into a 2-d array
        rows: expected row count (optional)
        cols: expected column count (optional)

    Returns:
        A new complex128 array

    Raises:
        ValueError: if the array is not 2-d, empty, mis-shaped or not finite
    """
    array = np.array(values, dtype=complex)
    if array.ndim != 2 or array.shape[0] == 0 or array.shape[1] == 0:
        raise ValueError(f"Expected a non-empty 2-d matrix, got shape {array.shape}")
    if rows is not None and array.shape[0] != rows:
        raise ValueError(f"Expected {rows} rows, got {array.shape[0]}")
    if cols is not None and array.shape[1] != cols:
        raise ValueError(f"Expected {cols} columns, got {array.shape[1]}")
    if not np.all(np.isfinite(array)):
        raise ValueError("Matrix entries must be finite")
    return array


def solve_linear(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Solve A x = b by LU factorization with partial pivoting

    Args:
        A: square real or complex matrix
        b: right-hand side vector (or matrix of column vectors)

    Returns:
        Solution x with the dtype promoted from A and b

    Raises:
        ValueError: if shapes do not match
        SingularMatrix: if a pivot is below 1e-14 * ||A||
    """
    A = np.asarray(A)
    b = np.asarray(b)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"solve_linear needs a square matrix, got {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"Right-hand side has {b.shape[0]} rows, matrix has {A.shape[0]}")

    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0 or not np.isfinite(scale):
        raise SingularMatrix("Matrix is zero or not finite")

    lu, piv = sla.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) < PIVOT_TOLERANCE * scale:
        raise SingularMatrix(
            f"Pivot {np.min(pivots):.3e} below {PIVOT_TOLERANCE:.0e} * ||A|| = {PIVOT_TOLERANCE * scale:.3e}"
        )
    return sla.lu_solve((lu, piv), b, check_finite=False)


def svd(A: np.ndarray) -> SvdResult:
    """
    Full singular value decomposition

    Args:
        A: finite real or complex matrix

    Returns:
        SvdResult with nonincreasing singular values

    Raises:
        ConvergenceFailure: if LAPACK does not converge
    """
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("svd input must be finite")
    try:
        left, sigma, right = sla.svd(A, full_matrices=True, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.warning("gesdd did not converge, retrying with gesvd")
        try:
            left, sigma, right = sla.svd(A, full_matrices=True, lapack_driver="gesvd")
        except np.linalg.LinAlgError as e:
            raise ConvergenceFailure(f"SVD did not converge: {e}")
    return SvdResult(singular_values=sigma, left=left, right=right)


def eigen_symmetric(A: np.ndarray, sym_tol: float = 1e-12) -> np.ndarray:
    """
    Eigenvalues of a real symmetric matrix, sorted descending

    Args:
        A: real matrix, symmetric up to sym_tol relative
        sym_tol: allowed relative asymmetry before symmetrization

    Returns:
        Real eigenvalues, largest first

    Raises:
        ValueError: if A is not square or is clearly not symmetric
        ConvergenceFailure: if LAPACK does not converge
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"eigen_symmetric needs a square matrix, got {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > sym_tol * scale:
        raise ValueError("Matrix is not symmetric within tolerance")
    A = 0.5 * (A + A.T)
    try:
        values = sla.eigh(A, eigvals_only=True)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"Symmetric eigensolver did not converge: {e}")
    return values[::-1]


def numerical_rank(A: np.ndarray, rel_tol: float = RANK_TOLERANCE) -> int:
    """Rank of A counting singular values above rel_tol * sigma_1"""
    return svd(A).rank(rel_tol)


def random_orthogonal(size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Random real orthogonal matrix

    QR of a standard normal matrix with the signs of R's diagonal moved into
    Q, so a fixed generator state always yields the same matrix.
    """
    if size == 0:
        return np.zeros((0, 0))
    q, r = sla.qr(rng.standard_normal((size, size)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def random_complex(shape, rng: np.random.Generator) -> np.ndarray:
    """Standard complex Gaussian array"""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_unit_complex(rng: np.random.Generator) -> complex:
    """Uniform point on the unit circle"""
    return complex(np.exp(2j * np.pi * rng.random()))
