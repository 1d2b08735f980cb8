"""
Classification of critical points for mlrank

Turns solver endpoints into statistical answers: reality, positivity and
rank flags, log-likelihood values, second-order type from the Lagrangian
Hessian reduced to the tangent space of the rank variety, ML duality
matching, Newton-contraction certificates and the DiaNA family sweep.

Probabilities are handled in cell coordinates p (all m*n cells, or the
n(n+1)/2 cells i <= j of a symmetric table); the rank condition is imposed
on the algebraic matrix S(p), which doubles the diagonal in the symmetric
case.
"""

import itertools
import logging
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .exceptions import NoBijection, NonpositiveProbability, PathFailure, RankDeficient, SingularMatrix
from .formulation.kernel_system import KernelSystem
from .likelihood import log_likelihood, omega_matrix
from .models import (
    CertificationReport,
    CriticalPoint,
    DataMatrix,
    DianaRow,
    DualityPairing,
    Extremum,
    ProbabilityMatrix,
    SolutionArchive,
)
from .monodromy import transport_archive
from .tracker import TrackerOptions, newton_refine
from .utils.linalg_utils import eigen_symmetric, numerical_rank, solve_linear, svd

logger = logging.getLogger(__name__)

REAL_TOLERANCE = 1e-8
POSITIVE_THRESHOLD = 1e-10
HESSIAN_TOLERANCE = 1e-8
MULTIPLIER_WARNING = 1e-6
SEPARATION_TOLERANCE = 1e-6
CONTRACTION_FACTOR = 0.1


@lru_cache(maxsize=None)
def _embedding(m: int, n: int, symmetric: bool) -> np.ndarray:
    """Linear map from cell coordinates to the algebraic matrix, shape (m, n, cells)"""
    if not symmetric:
        return np.eye(m * n).reshape(m, n, m * n)
    rows, cols = np.triu_indices(n)
    S = np.zeros((n, n, len(rows)))
    for k, (i, j) in enumerate(zip(rows, cols)):
        if i == j:
            S[i, i, k] = 2.0
        else:
            S[i, j, k] = 1.0
            S[j, i, k] = 1.0
    return S


def _cells(P: ProbabilityMatrix) -> np.ndarray:
    return np.real(P.values).reshape(-1)


def tangent_basis(P: ProbabilityMatrix, r: int, sum_zero: bool = True) -> np.ndarray:
    """
    Orthonormal basis, in cell coordinates, of the tangent space of the rank-r variety at P

    The tangent space is the set of directions X with U_perp^T S(X) V_perp = 0
    where U_perp and V_perp span the left and right singular vectors beyond
    the first r. With sum_zero the directions are also restricted to
    sum(dp) = 0.
    """
    A = np.real(P.algebraic)
    m, n = A.shape
    S = _embedding(m, n, P.symmetric)
    factors = svd(A)
    U_perp = factors.left[:, r:]
    V_perp = factors.right[r:, :].T
    constraints = np.einsum("ia,ijk,jb->abk", U_perp, S, V_perp).reshape(-1, S.shape[2])
    if sum_zero:
        constraints = np.vstack([constraints, np.ones((1, S.shape[2]))])
    if constraints.shape[0] == 0:
        return np.eye(S.shape[2])
    return sla.null_space(constraints, rcond=1e-10)


def geometric_residual(U: DataMatrix, P: ProbabilityMatrix, r: int) -> float:
    """
    Relative size of the likelihood gradient along the rank-r variety

    Zero exactly at critical points of the likelihood restricted to
    rank-r matrices; independent of any chart or multiplier.
    """
    p = _cells(P)
    if np.any(p <= 0):
        raise NonpositiveProbability("geometric residual needs strictly positive probabilities")
    u = U.values.reshape(-1)
    gradient = u / p - u.sum() / p.sum()
    norm = float(np.linalg.norm(gradient))
    if norm == 0.0:
        return 0.0
    basis = tangent_basis(P, r, sum_zero=False)
    return float(np.linalg.norm(basis.T @ gradient)) / norm


def _minor_index_pairs(m: int, n: int, size: int, symmetric: bool):
    row_sets = list(itertools.combinations(range(m), size))
    col_sets = list(itertools.combinations(range(n), size))
    for I in row_sets:
        for J in col_sets:
            if symmetric and J < I:
                continue
            yield I, J


def _minor_derivatives(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian of det(M) with respect to the entries of M"""
    k = M.shape[0]
    grad = np.zeros((k, k))
    hess = np.zeros((k, k, k, k))
    for a in range(k):
        rows = [i for i in range(k) if i != a]
        for b in range(k):
            cols = [j for j in range(k) if j != b]
            grad[a, b] = (-1) ** (a + b) * np.linalg.det(M[np.ix_(rows, cols)])
    for a, b, c, d in itertools.product(range(k), repeat=4):
        if a == c or b == d:
            continue
        rows = [i for i in range(k) if i not in (a, c)]
        cols = [j for j in range(k) if j not in (b, d)]
        sign = (-1) ** (a + b + c + d) * (1 if (a < c) == (b < d) else -1)
        hess[a, b, c, d] = sign * np.linalg.det(M[np.ix_(rows, cols)])
    return grad, hess


def lagrangian_hessian(U: DataMatrix, P: ProbabilityMatrix, r: int) -> Tuple[np.ndarray, float]:
    """
    Hessian of log L - sum lambda_i g_i in cell coordinates

    g_i runs over all (r+1)-minors of the algebraic matrix; the multipliers
    solve grad log L = sum lambda_i grad g_i in the least-squares sense.

    Returns:
        Tuple of (Hessian, relative multiplier residual)
    """
    p = _cells(P)
    u = U.values.reshape(-1)
    total_u, total_p = u.sum(), p.sum()
    gradient = u / p - total_u / total_p
    hessian = -np.diag(u / p ** 2) + total_u / total_p ** 2 * np.ones((len(p), len(p)))

    A = np.real(P.algebraic)
    m, n = A.shape
    if r >= min(m, n):
        return hessian, 0.0
    S = _embedding(m, n, P.symmetric).reshape(m * n, -1)

    grads = []
    hessians = []
    for I, J in _minor_index_pairs(m, n, r + 1, P.symmetric):
        grad_local, hess_local = _minor_derivatives(A[np.ix_(I, J)])
        flat = (np.array(I)[:, None] * n + np.array(J)[None, :]).reshape(-1)
        grad_full = np.zeros(m * n)
        grad_full[flat] = grad_local.reshape(-1)
        hess_full = np.zeros((m * n, m * n))
        hess_full[np.ix_(flat, flat)] = hess_local.reshape(len(flat), len(flat))
        grads.append(S.T @ grad_full)
        hessians.append(S.T @ hess_full @ S)

    G = np.array(grads).T
    multipliers, *_ = np.linalg.lstsq(G, gradient, rcond=None)
    residual = float(np.linalg.norm(G @ multipliers - gradient)) / max(1.0, float(np.linalg.norm(gradient)))
    if residual > MULTIPLIER_WARNING:
        logger.warning("Least-squares multiplier residual %.2e exceeds %.0e", residual, MULTIPLIER_WARNING)
    for weight, minor_hessian in zip(multipliers, hessians):
        hessian = hessian - weight * minor_hessian
    return hessian, residual


def reduced_hessian_type(U: DataMatrix, P: ProbabilityMatrix, r: int) -> Tuple[Extremum, np.ndarray, float]:
    """
    Second-order type of a positive rank-r critical point

    Returns:
        Tuple of (extremum, eigenvalues of the reduced Hessian, multiplier residual)

    Raises:
        RankDeficient: if P has numerical rank below r, a singular point of the variety
    """
    rank = numerical_rank(P.algebraic)
    if rank < r:
        raise RankDeficient(f"numerical rank {rank} < {r}")
    hessian, residual = lagrangian_hessian(U, P, r)
    basis = tangent_basis(P, r)
    if basis.shape[1] == 0:
        return Extremum.UNTESTED, np.zeros(0), residual
    eigenvalues = eigen_symmetric(basis.T @ hessian @ basis, sym_tol=1e-9)
    tol = HESSIAN_TOLERANCE * max(float(np.max(np.abs(eigenvalues))), np.finfo(float).tiny)
    if np.any(eigenvalues > tol) and np.any(eigenvalues < -tol):
        return Extremum.SADDLE, eigenvalues, residual
    if np.any(np.abs(eigenvalues) <= tol):
        return Extremum.UNTESTED, eigenvalues, residual
    if np.all(eigenvalues < 0):
        return Extremum.MAX, eigenvalues, residual
    return Extremum.MIN, eigenvalues, residual


def classify_matrix(U: DataMatrix, P: ProbabilityMatrix, r: int, newton_residual: float = 0.0,
                    index: int = -1) -> CriticalPoint:
    """Flags, log-likelihood and extremum type for a critical matrix"""
    is_real = P.is_real(REAL_TOLERANCE)
    cells = np.real(P.values)
    is_positive = bool(is_real and np.all(cells > POSITIVE_THRESHOLD))
    rank = numerical_rank(P.algebraic)
    point = CriticalPoint(
        P=P,
        log_likelihood=log_likelihood(U, cells) if is_positive else None,
        is_real=is_real,
        is_positive=is_positive,
        numerical_rank=rank,
        newton_residual=newton_residual,
        rank_deficient=rank < r,
        index=index,
    )
    if is_positive:
        try:
            point.extremum, _, point.multiplier_residual = reduced_hessian_type(
                U, ProbabilityMatrix(cells, P.symmetric), r)
        except RankDeficient as e:
            point.rank_deficient = True
            logger.warning("Critical point %d: %s; Hessian test skipped", index, e)
    elif point.rank_deficient:
        logger.warning("Critical point %d has numerical rank %d < %d", index, rank, r)
    return point


def classify_point(U: DataMatrix, x: np.ndarray, system: KernelSystem, index: int = -1) -> CriticalPoint:
    """
    Classify one solution of the kernel system

    Args:
        U: data the solution was computed for
        x: solution vector
        system: kernel system x belongs to
        index: position reported in the CriticalPoint

    Returns:
        CriticalPoint with flags and extremum type
    """
    residual = system.residual_norm(x, U)
    if residual > 1e-9:
        logger.warning("Classifying point %d with residual %.2e", index, residual)
    return classify_matrix(U, system.lift(x), system.model.r, residual, index)


def classify_points(U: DataMatrix, solutions: Sequence[np.ndarray], system: KernelSystem) -> List[CriticalPoint]:
    return [classify_point(U, x, system, index) for index, x in enumerate(solutions)]


def ranked(points: Sequence[CriticalPoint]) -> List[CriticalPoint]:
    """Positive points by decreasing log-likelihood"""
    return sorted((p for p in points if p.is_positive), key=lambda p: p.log_likelihood, reverse=True)


def has_conjugate_partners(points: Sequence[CriticalPoint], tol: float = 1e-8) -> bool:
    """True when every nonreal point has its complex conjugate in the list"""
    values = [p.P.values.reshape(-1) for p in points]
    for p, v in zip(points, values):
        if p.is_real:
            continue
        scale = max(1.0, float(np.max(np.abs(v))))
        if not any(np.max(np.abs(np.conj(v) - w)) < tol * scale for w in values):
            return False
    return True


def involution_sums(points: Sequence[CriticalPoint]) -> List[float]:
    """
    Sums of log-likelihoods paired from both ends of the positive ranking

    For self-dual models the k-th best and k-th worst positive points are
    dual to each other, and all these sums are equal.
    """
    values = [p.log_likelihood for p in ranked(points)]
    count = len(values)
    return [values[k] + values[count - 1 - k] for k in range((count + 1) // 2)]


def _statistical(point) -> np.ndarray:
    if isinstance(point, CriticalPoint):
        point = point.P
    if isinstance(point, ProbabilityMatrix):
        return point.values
    return np.asarray(point, dtype=complex)


def match_dual(points_r: Sequence, points_dual: Sequence, U: DataMatrix,
               rel_tolerance: float = 1e-8) -> DualityPairing:
    """
    Pair critical points of rank r with those of the dual rank

    Paired points have entrywise products equal to the duality constant of
    U. Pairs are chosen greedily by residual and then verified.

    Args:
        points_r: critical points (CriticalPoint, ProbabilityMatrix or arrays)
        points_dual: critical points of the dual rank
        U: data matrix
        rel_tolerance: residual bound relative to max |Omega|

    Returns:
        DualityPairing with the chosen pairs

    Raises:
        NoBijection: if the sets differ in size or some point has no partner
    """
    if len(points_r) != len(points_dual):
        raise NoBijection(f"Cannot pair {len(points_r)} points with {len(points_dual)} points")
    omega = omega_matrix(U)
    tolerance = rel_tolerance * float(np.max(np.abs(omega)))
    left = [_statistical(p) for p in points_r]
    right = [_statistical(q) for q in points_dual]

    residuals = np.array([[float(np.max(np.abs(p * q - omega))) for q in right] for p in left])
    if residuals.size and (np.any(residuals.min(axis=1) >= tolerance) or np.any(residuals.min(axis=0) >= tolerance)):
        raise NoBijection("Some critical point has no dual partner within tolerance")

    pairs: List[Tuple[int, int]] = []
    used_left, used_right = set(), set()
    for flat in np.argsort(residuals, axis=None):
        i, j = np.unravel_index(flat, residuals.shape)
        if i in used_left or j in used_right:
            continue
        pairs.append((int(i), int(j)))
        used_left.add(i)
        used_right.add(j)
    pairs.sort()
    max_residual = max((residuals[i, j] for i, j in pairs), default=0.0)
    if max_residual >= tolerance:
        raise NoBijection(f"Greedy pairing leaves residual {max_residual:.2e} above {tolerance:.2e}")
    logger.info("Matched %d dual pairs, max residual %.2e", len(pairs), max_residual)
    return DualityPairing(pairs=pairs, max_residual=float(max_residual), omega=omega, tolerance=tolerance)


def certify_distinct(solutions: Sequence[np.ndarray], system: KernelSystem, U) -> CertificationReport:
    """
    Newton-contraction and separation check for a solution set

    Each point passes when successive Newton updates shrink by at least a
    factor of ten (updates already at rounding level count as converged).
    Lifted matrices must be pairwise separated by more than 1e-6 relative.
    Violations are reported, never raised.
    """
    certified: List[bool] = []
    contraction: List[float] = []
    violations: List[str] = []
    for index, x in enumerate(solutions):
        x = np.array(x, dtype=complex)
        floor = 1e-13 * (1.0 + float(np.max(np.abs(x))))
        updates = []
        try:
            for _ in range(3):
                dx = solve_linear(system.jacobian(x, U), -system.residual(x, U))
                updates.append(float(np.max(np.abs(dx))))
                x = x + dx
        except SingularMatrix:
            certified.append(False)
            contraction.append(float("inf"))
            violations.append(f"point {index}: singular Jacobian")
            continue
        ratios = [later / earlier for earlier, later in zip(updates, updates[1:]) if earlier > floor]
        worst = max(ratios, default=0.0)
        ok = all(ratio <= CONTRACTION_FACTOR for ratio in ratios)
        certified.append(ok)
        contraction.append(worst)
        if not ok:
            violations.append(f"point {index}: Newton contraction {worst:.2e}")

    keys = [system.fingerprint(x) for x in solutions]
    min_separation = float("inf")
    for i, j in itertools.combinations(range(len(keys)), 2):
        scale = max(1.0, float(np.linalg.norm(keys[i])), float(np.linalg.norm(keys[j])))
        distance = float(np.linalg.norm(keys[i] - keys[j])) / scale
        min_separation = min(min_separation, distance)
        if distance <= SEPARATION_TOLERANCE:
            violations.append(f"points {i} and {j} coincide (distance {distance:.2e})")
    return CertificationReport(certified=certified, contraction=contraction,
                               min_separation=min_separation, violations=violations)


# ----------------------------------------------------------------------
# DiaNA family


def diana_data(a: float, b: float) -> DataMatrix:
    """4 x 4 data with a on the diagonal and b elsewhere"""
    return DataMatrix(np.full((4, 4), float(b)) + (float(a) - float(b)) * np.eye(4))


def diana_mle(a: float, b: float) -> ProbabilityMatrix:
    """Global maximum of the rank-2 likelihood for diana_data(a, b)"""
    same, other = a + b, 2.0 * b
    block = np.array([[same, same], [same, same]])
    cross = np.full((2, 2), other)
    P = np.block([[block, cross], [cross, block]]) / (8.0 * (a + 3.0 * b))
    return ProbabilityMatrix(P, False)


def diana_omega(a: float, b: float) -> np.ndarray:
    """Duality constant of diana_data(a, b)"""
    return diana_data(a, b).values / (64.0 * (a + 3.0 * b))


def min_pairwise_distance(matrices: Sequence[np.ndarray]) -> float:
    """Smallest Euclidean distance between vectorized matrices"""
    flat = [np.asarray(M).reshape(-1) for M in matrices]
    best = float("inf")
    for i, j in itertools.combinations(range(len(flat)), 2):
        best = min(best, float(np.linalg.norm(flat[i] - flat[j])))
    return best


def diana_sweep(a_values: Sequence[float], archive: SolutionArchive, rng_seed: int = 0,
                tracker: Optional[TrackerOptions] = None, threads: Optional[int] = None) -> List[DianaRow]:
    """
    Solve the rank-2 model for diana_data(a, (4 - a) / 3) at each a

    Args:
        a_values: diagonal values in (1, 4)
        archive: complete (4, 4, 2) archive
        rng_seed: seed for charts and gammas
        tracker: tracker settings
        threads: worker threads

    Returns:
        One DianaRow per a; failures are counted per row, not raised
    """
    rows = []
    for a in a_values:
        if not 1.0 < a < 4.0:
            raise ValueError(f"a must lie in (1, 4), got {a}")
        b = (4.0 - a) / 3.0
        U = diana_data(a, b)
        try:
            system, results = transport_archive(archive, U, rng_seed, tracker, threads)
        except PathFailure as e:
            logger.warning("Too many failed paths at a = %.3f", a)
            system = None
            results = e.results
        if system is None:
            rows.append(DianaRow(a, 0, 0, 0, float("nan"), float("nan"), None, len(results)))
            continue

        points = []
        failed = 0
        for index, result in enumerate(results):
            if not result.success:
                failed += 1
                continue
            x, _, _ = newton_refine(system, result.endpoint, system.as_parameter(U))
            points.append(classify_point(U, x, system, index))

        positive = ranked(points)
        best = positive[0].P if positive else None
        error = float(np.max(np.abs(best.values - diana_mle(a, b).values))) if best is not None else float("nan")
        rows.append(DianaRow(
            a=float(a),
            count_total=len(points),
            count_real=sum(1 for p in points if p.is_real),
            count_positive=len(positive),
            min_pairwise_distance=min_pairwise_distance([p.P.values for p in points]),
            mle_error=error,
            argmax=np.real(best.values) if best is not None else None,
            failed_paths=failed,
        ))
        logger.info("DiaNA a = %.3f: %d real, %d positive, MLE error %.2e", a, rows[-1].count_real,
                    rows[-1].count_positive, error)
    return rows
