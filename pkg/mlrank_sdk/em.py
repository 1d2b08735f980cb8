"""
EM baseline for mlrank

Multi-start EM over the mixture parametrization P = A diag(weights) B,
deduplication of the local maxima it finds, comparison of those maxima
with the global critical-point list, and the explicit rank-2 non-negative
factorization.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from .classify import geometric_residual
from .config import default_threads
from .exceptions import InvalidModel, NotNonnegative, NotRank2, NumericalUnderflow, SingularMatrix
from .formulation.kernel_system import build_system
from .likelihood import log_likelihood
from .models import (
    CriticalPoint,
    DataMatrix,
    EmComparisonReport,
    EmMatch,
    EmResult,
    MatchStatus,
    MixtureParams,
    ProbabilityMatrix,
    RankModel,
)
from .utils.linalg_utils import numerical_rank

logger = logging.getLogger(__name__)

UNDERFLOW = 1e-300
DEDUP_TOLERANCE = 1e-5
FIXED_POINT_FACTOR = 10.0
MATCH_TOLERANCE = 1e-4
BOUNDARY_RESIDUAL = 1e-3


def random_start(m: int, n: int, r: int, rng: np.random.Generator) -> MixtureParams:
    """Uniform sample from the product of simplices parametrizing the mixture model"""
    return MixtureParams(
        A=rng.dirichlet(np.ones(m), size=r).T,
        weights=rng.dirichlet(np.ones(r)),
        B=rng.dirichlet(np.ones(n), size=r),
    )


def em_step(counts: np.ndarray, params: MixtureParams) -> MixtureParams:
    """
    One EM update

    With ratio R = U / P the expected counts of component k are
    w_k A_ik B_kj R_ij, so every update is multiplicative.

    Raises:
        NumericalUnderflow: if a cell probability or a component vanishes
    """
    A, w, B = params.A, params.weights, params.B
    P = (A * w) @ B
    if np.any(P <= UNDERFLOW):
        raise NumericalUnderflow("A cell probability underflowed")
    R = counts / P
    row_mass = A * (R @ B.T) * w
    col_mass = (A.T @ R) * B * w[:, None]
    weights = row_mass.sum(axis=0)
    if np.any(weights <= UNDERFLOW):
        raise NumericalUnderflow("A mixture component lost all its mass")
    return MixtureParams(
        A=row_mass / weights,
        weights=weights / counts.sum(),
        B=col_mass / col_mass.sum(axis=1, keepdims=True),
    )


def _is_fixed_point(counts: np.ndarray, params: MixtureParams, tol: float) -> bool:
    """One more EM step leaves the lifted P within FIXED_POINT_FACTOR * tol"""
    moved = em_step(counts, params).lifted()
    return float(np.max(np.abs(moved - params.lifted()))) < FIXED_POINT_FACTOR * tol


def em_run(U: DataMatrix, r: int, start: MixtureParams, tol: float = 1e-10, max_iter: int = 100000) -> EmResult:
    """
    Run EM from one start until it reaches a fixed point

    A stalled log-likelihood alone does not stop the run: slow plateaus keep
    iterating until the fixed-point check passes or max_iter is reached, and
    such runs come back with converged = False.

    Args:
        U: data table
        r: number of mixture components
        start: strictly positive starting parameters
        tol: stop once the log-likelihood increment drops below tol and one
            more step moves the lifted P by less than 10 * tol
        max_iter: iteration cap

    Returns:
        EmResult for the last iterate

    Raises:
        NumericalUnderflow: if responsibilities vanish
    """
    if U.symmetric:
        raise InvalidModel("The mixture EM works on general tables")
    if start.A.shape != (U.m, r) or start.B.shape != (r, U.n):
        raise ValueError(f"Start parameters do not match a {U.m} x {U.n} rank-{r} model")
    counts = U.values
    params = start
    current = log_likelihood(U, params.lifted())
    converged = False
    iteration = 0
    while iteration < max_iter:
        params = em_step(counts, params)
        iteration += 1
        value = log_likelihood(U, params.lifted())
        increment = value - current
        if increment < -1e-9 * max(1.0, abs(current)):
            logger.warning("EM log-likelihood decreased by %.3e at iteration %d", -increment, iteration)
        current = value
        if abs(increment) < tol and _is_fixed_point(counts, params, tol):
            converged = True
            break
    return EmResult(params=params, P=params.lifted(), log_likelihood=current, iterations=iteration,
                    converged=converged)


def deduplicate(results: Sequence[EmResult], tolerance: float = DEDUP_TOLERANCE) -> List[EmResult]:
    """Cluster runs by lifted-P distance; keep the best run of each cluster with its hit count"""
    clusters: List[EmResult] = []
    for result in sorted(results, key=lambda res: res.log_likelihood, reverse=True):
        for cluster in clusters:
            if np.max(np.abs(cluster.P - result.P)) < tolerance:
                cluster.hits += 1
                break
        else:
            clusters.append(EmResult(result.params, result.P, result.log_likelihood, result.iterations,
                                     result.converged, hits=1))
    return clusters


def multistart_em(U: DataMatrix, r: int, n_starts: int, seed: int = 0, tol: float = 1e-10,
                  max_iter: int = 100000, threads: Optional[int] = None) -> List[EmResult]:
    """
    EM from n_starts uniform random starts, deduplicated

    Args:
        U: data table
        r: number of mixture components
        n_starts: number of starts
        seed: master seed; start i uses the stream (seed, i)
        tol: EM stopping tolerance
        max_iter: EM iteration cap
        threads: worker threads

    Returns:
        Distinct converged maxima sorted by log-likelihood descending
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")

    def run(index: int) -> Optional[EmResult]:
        rng = np.random.default_rng([seed, index])
        for attempt in range(3):
            start = random_start(U.m, U.n, r, rng)
            try:
                return em_run(U, r, start, tol, max_iter)
            except NumericalUnderflow:
                logger.debug("EM start %d underflowed (attempt %d), restarting", index, attempt)
        return None

    workers = max(1, threads or default_threads())
    if workers == 1:
        runs = [run(i) for i in range(n_starts)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            runs = list(executor.map(run, range(n_starts)))

    finished = [res for res in runs if res is not None and res.converged]
    if len(finished) < n_starts:
        logger.warning("%d of %d EM starts did not converge", n_starts - len(finished), n_starts)
    clusters = deduplicate(finished)
    logger.info("EM with r = %d: %d starts, %d distinct fixed points", r, n_starts, len(clusters))
    return clusters


def rank2_factorization(P, rank_tol: float = 1e-8) -> MixtureParams:
    """
    Mixture parameters for a non-negative rank-2 matrix

    The rows of P scaled to sum 1 lie on the segment cut from the simplex by
    the row space. The segment endpoints become the rows of B; each row's
    position on the segment and its mass give A and the weights.

    Raises:
        NotNonnegative: if an entry is below -1e-12
        NotRank2: if the numerical rank is not 2
    """
    P = np.real(np.asarray(P.values if isinstance(P, ProbabilityMatrix) else P, dtype=complex))
    if np.any(P < -1e-12):
        raise NotNonnegative("rank2_factorization needs a non-negative matrix")
    P = np.clip(P, 0.0, None)
    P = P / P.sum()
    rank = numerical_rank(P, rank_tol)
    if rank != 2:
        raise NotRank2(f"Matrix has numerical rank {rank}, expected 2")

    mass = P.sum(axis=1)
    live = mass > 1e-15
    rows = P[live] / mass[live, None]

    gaps = np.max(np.abs(rows[:, None, :] - rows[None, :, :]), axis=2)
    a, b = np.unravel_index(np.argmax(gaps), gaps.shape)
    origin, direction = rows[a], rows[b] - rows[a]
    with np.errstate(divide="ignore", invalid="ignore"):
        limits = -origin / direction
    t_low = float(np.max(limits[direction > 0]))
    t_high = float(np.min(limits[direction < 0]))
    B = np.clip(np.vstack([origin + t_low * direction, origin + t_high * direction]), 0.0, None)
    B = B / B.sum(axis=1, keepdims=True)

    position = ((rows - origin) @ direction / (direction @ direction) - t_low) / (t_high - t_low)
    C = np.zeros((P.shape[0], 2))
    C[live, 0] = mass[live] * (1.0 - position)
    C[live, 1] = mass[live] * position
    weights = C.sum(axis=0)
    params = MixtureParams(A=C / weights, weights=weights, B=B)

    error = float(np.max(np.abs(params.lifted() - P)))
    if error > 1e-8:
        logger.warning("Rank-2 factorization reconstructs P only to %.2e", error)
    return params


def _chart_residual(U: DataMatrix, P: np.ndarray, r: int) -> float:
    """Kernel-system residual of P after fitting the chart coordinates and multipliers"""
    data, matrix = U, P
    if U.m > U.n:
        data, matrix = U.transposed(), P.T
    model = RankModel(data.m, data.n, r)
    for patched, seed in ((False, 0), (True, 1), (True, 2)):
        system = build_system(model, patched=patched, rng_seed=seed)
        try:
            _, residual = system.refit(matrix, data)
            return residual
        except SingularMatrix:
            continue
    return float("inf")


def compare_em_vs_global(U: DataMatrix, r: int, em_results: Sequence[EmResult],
                         critical_points: Sequence[CriticalPoint]) -> EmComparisonReport:
    """
    Match EM maxima with the positive critical points

    An EM maximum matches the nearest positive critical point within 1e-4.
    An unmatched maximum whose kernel residual exceeds 1e-3 lies on the
    boundary of the mixture model; one that still solves the kernel
    equations is reported as unmatched. The kernel and geometric residuals
    are reported for every EM maximum.
    """
    positive = [(index, point) for index, point in enumerate(critical_points) if point.is_positive]
    matches = []
    for em_index, result in enumerate(em_results):
        best_index, best_distance = None, float("inf")
        for index, point in positive:
            distance = float(np.max(np.abs(point.P.real_values() - result.P)))
            if distance < best_distance:
                best_index, best_distance = index, distance
        kernel = _chart_residual(U, result.P, r)
        geometric = geometric_residual(U, ProbabilityMatrix(result.P, False), r)
        matched = best_index if best_distance < MATCH_TOLERANCE else None
        if matched is not None:
            status = MatchStatus.MATCHED
        elif kernel > BOUNDARY_RESIDUAL:
            status = MatchStatus.BOUNDARY
        else:
            status = MatchStatus.UNMATCHED
            logger.warning("EM maximum %d satisfies the critical equations but matches no critical point", em_index)
        matches.append(EmMatch(em_index, matched, best_distance, kernel, geometric, status))

    global_max = max((point.log_likelihood for _, point in positive), default=None)
    best_em = em_results[0].log_likelihood if em_results else None
    attained = False
    fraction = 0.0
    total_hits = sum(result.hits for result in em_results)
    if global_max is not None:
        for match, result in zip(matches, em_results):
            if match.critical_index is not None and \
                    critical_points[match.critical_index].log_likelihood == global_max:
                attained = True
                fraction = result.hits / total_hits if total_hits else 0.0
                break
    report = EmComparisonReport(matches, global_max, best_em, attained, fraction)
    logger.info("EM comparison: %d matched, %d boundary, %d unmatched, global max attained: %s",
                len(matches) - report.boundary_count - report.unmatched_count, report.boundary_count,
                report.unmatched_count, attained)
    return report
