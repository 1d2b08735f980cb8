"""
Likelihood functions for mlrank

Log-likelihood, margins, the duality constant Omega_U and the closed-form
rank-one estimate, for general and symmetric tables.
"""

import logging
from typing import Tuple, Union

import numpy as np

from .exceptions import NonpositiveProbability
from .models import DataMatrix, ProbabilityMatrix, doubling_matrix, symmetric_from_triangle, upper_triangle

logger = logging.getLogger(__name__)

ArrayOrTable = Union[np.ndarray, ProbabilityMatrix]


def _cell_values(P: ArrayOrTable, symmetric: bool) -> np.ndarray:
    if isinstance(P, ProbabilityMatrix):
        if P.symmetric != symmetric:
            raise ValueError("Probability and data matrices disagree on symmetry")
        return P.values
    values = np.asarray(P)
    if symmetric and values.ndim == 2:
        values = upper_triangle(values)
    return values


def log_likelihood(U: DataMatrix, P: ArrayOrTable) -> float:
    """
    Log-likelihood sum u_ij log p_ij - u_++ log p_++

    In symmetric mode the sums run over the stored i <= j cells.

    Args:
        U: data table
        P: probability table of the same shape (real part is used)

    Returns:
        The log-likelihood value

    Raises:
        NonpositiveProbability: if any p_ij <= 0
    """
    p = _cell_values(P, U.symmetric)
    if np.iscomplexobj(p):
        p = np.real(p)
    if p.shape != U.values.shape:
        raise ValueError(f"Shape mismatch: data {U.values.shape}, probabilities {p.shape}")
    if np.any(p <= 0):
        raise NonpositiveProbability("log-likelihood needs strictly positive probabilities")
    u = U.values
    return float(np.sum(u * np.log(p)) - u.sum() * np.log(p.sum()))


def margins(M) -> Tuple[np.ndarray, np.ndarray, complex]:
    """
    Row sums, column sums and grand total of a matrix

    Tables are taken in their algebraic form, so symmetric tables report
    the margins of the doubled-diagonal matrix.
    """
    if isinstance(M, (DataMatrix, ProbabilityMatrix)):
        M = M.algebraic
    M = np.asarray(M)
    return M.sum(axis=1), M.sum(axis=0), M.sum()


def omega_matrix(U: DataMatrix) -> np.ndarray:
    """
    The m x n matrix with entries u_ij u_i+ u_+j / u_++^3

    For symmetric data see symmetric_omega_matrix.
    """
    if U.symmetric:
        return symmetric_omega_matrix(U)
    u = U.values
    rows, cols, total = margins(u)
    return u * np.outer(rows, cols) / total ** 3


def symmetric_omega_matrix(U: DataMatrix) -> np.ndarray:
    """
    Duality constant for symmetric tables, as an upper-triangle vector

    With W = D * U (diagonal doubled), paired statistical critical points
    satisfy p_ii q_ii = w_ii w_i+ w_+i / w_++^3 and
    p_ij q_ij = 4 w_ij w_i+ w_+j / w_++^3 for i < j.
    """
    if not U.symmetric:
        raise ValueError("symmetric_omega_matrix needs symmetric data")
    w = U.algebraic
    rows, cols, total = margins(w)
    full = w * np.outer(rows, cols) / total ** 3
    weights = 4.0 * np.ones_like(full) - 3.0 * np.eye(U.n)
    return upper_triangle(full * weights)


def rank_one_mle(U: DataMatrix) -> ProbabilityMatrix:
    """
    Unique critical point of the independence model

    General tables give u_i+ u_+j / u_++^2. Symmetric tables give
    p_ii = theta_i^2 and p_ij = 2 theta_i theta_j with theta = w_+j / (2 u_++).
    """
    if U.symmetric:
        w = U.algebraic
        theta = w.sum(axis=0) / (2.0 * U.total)
        full = np.outer(theta, theta) * (2.0 * np.ones((U.n, U.n)) - np.eye(U.n))
        return ProbabilityMatrix(upper_triangle(full), True)
    rows, cols, total = margins(U.values)
    return ProbabilityMatrix(np.outer(rows, cols) / total ** 2, False)


def full_rank_mle(U: DataMatrix) -> ProbabilityMatrix:
    """Critical point when the rank constraint is vacuous: P = U / u_++"""
    return ProbabilityMatrix(U.values / U.total, U.symmetric)


def margin_defect(U: DataMatrix, P: ProbabilityMatrix) -> float:
    """
    Largest deviation of P's margins from the data margins

    Every complex critical point satisfies p_i+ = u_i+ / u_++ and
    p_+j = u_+j / u_++ (algebraic forms when symmetric).
    """
    p_rows, p_cols, _ = margins(P)
    u_rows, u_cols, _ = margins(U)
    total = U.total
    return float(max(np.max(np.abs(p_rows - u_rows / total)),
                     np.max(np.abs(p_cols - u_cols / total))))


def statistical_matrix(P: ProbabilityMatrix) -> np.ndarray:
    """Cell probabilities as a full matrix (mirrored, not doubled, when symmetric)"""
    if P.symmetric:
        return symmetric_from_triangle(P.values, P.n)
    return P.values.copy()


__all__ = [
    "doubling_matrix",
    "full_rank_mle",
    "log_likelihood",
    "margin_defect",
    "margins",
    "omega_matrix",
    "rank_one_mle",
    "statistical_matrix",
    "symmetric_omega_matrix",
]
