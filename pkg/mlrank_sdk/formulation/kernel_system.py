"""
Kernel formulation of the rank-constrained likelihood equations

The rank condition is parametrized as P = A P1 B with A = [I; L1] and
B = [I, R1]; the left and right kernels of P are spanned by the rows of
L = [L1, -I] and the columns of R = [R1; -I]. Critical points of the
likelihood are the solutions of

    P * (R Lambda L)^T + u_++ P - U = 0

(entrywise product), with one equation per column replaced by the
column sum. In patched mode the charts are moved by random orthogonal
matrices O1..O4 so that no solution sits at infinity of the chart.

Symmetric tables use A P1 A^T with symmetric P1 and Lambda, and the
doubled-diagonal form of the data.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..exceptions import DegenerateSeed, InvalidModel, SingularMatrix
from ..models import (
    DataMatrix,
    ProbabilityMatrix,
    RankModel,
    doubling_matrix,
    symmetric_from_triangle,
    triangle_size,
    upper_triangle,
)
from ..utils.linalg_utils import random_complex, random_orthogonal, random_unit_complex, solve_linear
from .base_system import ParametricSystem

logger = logging.getLogger(__name__)

SEED_TOTAL_MODULUS = 10.0
DEGENERATE_TOTAL = 1e-8
MAX_SEED_ATTEMPTS = 10


@dataclass
class _Parts:
    """Intermediate matrices shared by the residual and the Jacobian"""
    P1: np.ndarray
    L1: np.ndarray
    R1: Optional[np.ndarray]
    Lam: np.ndarray
    At: np.ndarray
    Bt: np.ndarray
    P: np.ndarray
    L: np.ndarray
    R: Optional[np.ndarray]
    M: np.ndarray


class KernelSystem(ParametricSystem):
    """
    The kernel system for one RankModel

    Unknown layout (row-major blocks): P1, L1, R1, Lambda. Symmetric models
    drop R1 and store only the upper triangles of P1 and Lambda; a diagonal
    entry v_aa of P1 enters the matrix as 2 v_aa.
    """

    def __init__(self, model: RankModel, patched: bool = False, rng_seed: int = 0):
        if model.r == model.m and model.r == model.n:
            raise InvalidModel("Rank equals both dimensions; the MLE is U / u_++ and no system is needed")
        if not model.symmetric and model.m > model.n:
            raise InvalidModel(f"Kernel system expects m <= n, got {model.m} x {model.n}; transpose the data")
        self.model = model
        self.patched = patched
        self.rng_seed = rng_seed

        m, n, r = model.m, model.n, model.r
        rng = np.random.default_rng(rng_seed)
        if patched:
            self.O1 = random_orthogonal(m - r, rng)
            self.O2 = random_orthogonal(n - r, rng)
            self.O3 = random_orthogonal(m, rng)
            self.O4 = random_orthogonal(n, rng)
        else:
            self.O1 = np.eye(m - r)
            self.O2 = np.eye(n - r)
            self.O3 = np.eye(m)
            self.O4 = np.eye(n)

        if model.symmetric:
            sizes = [("P1", triangle_size(r)), ("L1", (n - r) * r), ("Lambda", triangle_size(n - r))]
        else:
            sizes = [("P1", r * r), ("L1", (m - r) * r), ("R1", r * (n - r)), ("Lambda", (n - r) * (m - r))]
        self.blocks: Dict[str, slice] = {}
        start = 0
        for name, size in sizes:
            self.blocks[name] = slice(start, start + size)
            start += size
        self._size = start

        # column-sum equation positions
        if model.symmetric:
            self._tri_rows, self._tri_cols = np.triu_indices(n)
            self._replace = np.flatnonzero(self._tri_rows == self._tri_cols)
        else:
            self._replace = np.array([j * n + j if j < m else (m - 1) * n + j for j in range(n)])

        if self._size != model.num_unknowns:
            raise InvalidModel(f"Unknown count {self._size} does not match {model.num_unknowns} equations")

    def __repr__(self) -> str:
        return f"KernelSystem({self.model.label()}, patched={self.patched})"

    @property
    def num_unknowns(self) -> int:
        return self._size

    # ------------------------------------------------------------------
    # parameters

    def as_parameter(self, params) -> np.ndarray:
        """Data as a full complex matrix (mirrored, not doubled, when symmetric)"""
        if isinstance(params, DataMatrix):
            if params.symmetric != self.model.symmetric:
                raise ValueError("Data symmetry does not match the model")
            params = params.matrix
        array = np.asarray(params, dtype=complex)
        if self.model.symmetric and array.ndim == 1:
            array = symmetric_from_triangle(array, self.model.n)
        if array.shape != (self.model.m, self.model.n):
            raise ValueError(f"Parameter shape {array.shape} does not match model {self.model.label()}")
        return array

    def _weighted(self, U: np.ndarray) -> Tuple[np.ndarray, complex]:
        if self.model.symmetric:
            return U * doubling_matrix(self.model.n), (U.sum() + np.trace(U)) / 2.0
        return U, U.sum()

    def random_parameter(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        """Standard complex Gaussian data matrix (symmetrized when needed)"""
        G = random_complex((self.model.m, self.model.n), rng) * scale
        if self.model.symmetric:
            G = (G + G.T) / 2.0
        return G

    # ------------------------------------------------------------------
    # evaluation

    def _unpack(self, x: np.ndarray) -> _Parts:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self._size,):
            raise ValueError(f"Expected {self._size} unknowns, got shape {x.shape}")
        m, n, r = self.model.m, self.model.n, self.model.r
        if self.model.symmetric:
            P1 = symmetric_from_triangle(x[self.blocks["P1"]], r) * doubling_matrix(r)
            L1 = x[self.blocks["L1"]].reshape(n - r, r)
            Lam = symmetric_from_triangle(x[self.blocks["Lambda"]], n - r)
            At = self.O3 @ np.vstack([np.eye(r), L1])
            P = At @ P1 @ At.T
            L = self.O1 @ np.hstack([L1, -np.eye(n - r)]) @ self.O3.T
            M = L.T @ Lam @ L
            return _Parts(P1, L1, None, Lam, At, At.T, P, L, None, M)
        P1 = x[self.blocks["P1"]].reshape(r, r)
        L1 = x[self.blocks["L1"]].reshape(m - r, r)
        R1 = x[self.blocks["R1"]].reshape(r, n - r)
        Lam = x[self.blocks["Lambda"]].reshape(n - r, m - r)
        At = self.O3 @ np.vstack([np.eye(r), L1])
        Bt = np.hstack([np.eye(r), R1]) @ self.O4.T
        P = At @ P1 @ Bt
        L = self.O1 @ np.hstack([L1, -np.eye(m - r)]) @ self.O3.T
        R = self.O4 @ np.vstack([R1, -np.eye(n - r)]) @ self.O2.T
        M = (R @ Lam @ L).T
        return _Parts(P1, L1, R1, Lam, At, Bt, P, L, R, M)

    def _select(self, E: np.ndarray) -> np.ndarray:
        """Equation vector(s) from residual matrices of shape (..., m, n)"""
        col_sums = E.sum(axis=-2)
        if self.model.symmetric:
            e = E[..., self._tri_rows, self._tri_cols].copy()
            e[..., self._replace] = col_sums
            return e
        e = E.reshape(E.shape[:-2] + (-1,)).copy()
        e[..., self._replace] = col_sums
        return e

    def algebraic_matrix(self, x: np.ndarray) -> np.ndarray:
        """The rank-constrained matrix P(x) (diagonal doubled when symmetric)"""
        return self._unpack(x).P

    def multiplier_matrix(self, x: np.ndarray) -> np.ndarray:
        """The multiplier matrix (R Lambda L)^T, or L^T Lambda L when symmetric"""
        return self._unpack(x).M

    def residual(self, x: np.ndarray, params) -> np.ndarray:
        U = self.as_parameter(params)
        W, u = self._weighted(U)
        parts = self._unpack(x)
        E = parts.P * parts.M + u * parts.P - W
        return self._select(E)

    def jacobian(self, x: np.ndarray, params) -> np.ndarray:
        U = self.as_parameter(params)
        _, u = self._weighted(U)
        parts = self._unpack(x)
        if self.model.symmetric:
            dE = self._symmetric_derivatives(parts, u)
        else:
            dE = self._general_derivatives(parts, u)
        return self._select(dE).T

    def _general_derivatives(self, p: _Parts, u: complex) -> np.ndarray:
        m, n, r = self.model.m, self.model.n, self.model.r
        Mu = p.M + u

        dP = np.einsum("ia,bj->abij", p.At, p.Bt).reshape(-1, m, n)
        d_p1 = dP * Mu

        dP = np.einsum("ia,bj->abij", self.O3[:, r:], p.P1 @ p.Bt)
        dM = np.einsum("ib,ja->abij", self.O3[:, :r], p.R @ p.Lam @ self.O1)
        d_l1 = (dP * Mu + p.P * dM).reshape(-1, m, n)

        dP = np.einsum("ia,jb->abij", p.At @ p.P1, self.O4[:, r:])
        dM = np.einsum("ib,ja->abij", p.L.T @ p.Lam.T @ self.O2, self.O4[:, :r])
        d_r1 = (dP * Mu + p.P * dM).reshape(-1, m, n)

        dM = np.einsum("bi,ja->abij", p.L, p.R)
        d_lam = (p.P * dM).reshape(-1, m, n)

        return np.concatenate([d_p1, d_l1, d_r1, d_lam], axis=0)

    def _symmetric_derivatives(self, p: _Parts, u: complex) -> np.ndarray:
        n, r = self.model.n, self.model.r
        Mu = p.M + u
        ra, rb = np.triu_indices(r)
        ka, kb = np.triu_indices(n - r)

        G = np.einsum("ia,bj->abij", p.At, p.At.T)
        dP = G[ra, rb] + G[rb, ra]
        d_p1 = dP * Mu

        T = np.einsum("ia,bj->abij", self.O3[:, r:], p.P1 @ p.At.T)
        dP = T + np.swapaxes(T, -1, -2)
        S = np.einsum("ib,ja->abij", self.O3[:, :r], p.L.T @ p.Lam @ self.O1)
        dM = S + np.swapaxes(S, -1, -2)
        d_l1 = (dP * Mu + p.P * dM).reshape(-1, n, n)

        H = np.einsum("ai,bj->abij", p.L, p.L)
        weights = np.where(ka == kb, 0.5, 1.0)[:, None, None]
        dM = (H[ka, kb] + H[kb, ka]) * weights
        d_lam = p.P * dM

        return np.concatenate([d_p1, d_l1, d_lam], axis=0)

    def fingerprint(self, x: np.ndarray) -> np.ndarray:
        return self.algebraic_matrix(x).reshape(-1)

    def lift(self, x: np.ndarray) -> ProbabilityMatrix:
        """Cell probabilities for a solution vector"""
        P = self.algebraic_matrix(x)
        if self.model.symmetric:
            P = (P + P.T) / 2.0
        return ProbabilityMatrix.from_algebraic(P, self.model.symmetric)

    # ------------------------------------------------------------------
    # starting points and chart changes

    def _pack(self, P1: np.ndarray, L1: np.ndarray, R1: Optional[np.ndarray], Lam: np.ndarray) -> np.ndarray:
        if self.model.symmetric:
            r = self.model.r
            return np.concatenate([
                upper_triangle(P1 / doubling_matrix(r)),
                L1.reshape(-1),
                upper_triangle(Lam),
            ]).astype(complex)
        return np.concatenate([P1.reshape(-1), L1.reshape(-1), R1.reshape(-1), Lam.reshape(-1)]).astype(complex)

    def seed_solution(self, rng_seed: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Random start pair (x0, U0) with F(x0; U0) = 0 and sum(U0) = c, |c| = 10

        Args:
            rng_seed: seed for the random blocks

        Returns:
            Tuple of (x0, U0); U0 is a full (mirrored) matrix

        Raises:
            DegenerateSeed: if every attempt draws p_++ near zero
        """
        rng = np.random.default_rng(rng_seed)
        for attempt in range(MAX_SEED_ATTEMPTS):
            x = random_complex(self._size, rng)
            P = self.algebraic_matrix(x)
            total = P.sum() / 2.0 if self.model.symmetric else P.sum()
            if abs(total) < DEGENERATE_TOTAL:
                logger.debug("Seed attempt %d drew p_++ = %.3e, resampling", attempt, abs(total))
                continue
            x[self.blocks["P1"]] /= total
            parts = self._unpack(x)
            c = SEED_TOTAL_MODULUS * random_unit_complex(rng)
            W0 = parts.P * parts.M + c * parts.P
            if self.model.symmetric:
                U0 = W0 / doubling_matrix(self.model.n)
                U0 = (U0 + U0.T) / 2.0
            else:
                U0 = W0
            return x, U0
        raise DegenerateSeed(f"p_++ stayed below {DEGENERATE_TOTAL} for {MAX_SEED_ATTEMPTS} draws")

    def refit(self, P: np.ndarray, params) -> Tuple[np.ndarray, float]:
        """
        Chart coordinates for a rank-r matrix, with multipliers by least squares

        Args:
            P: algebraic matrix (diagonal doubled when symmetric)
            params: data the multipliers are fitted against

        Returns:
            Tuple of (x, residual_norm)

        Raises:
            SingularMatrix: if the leading block of P is singular in this chart
        """
        m, n, r = self.model.m, self.model.n, self.model.r
        P = np.asarray(P, dtype=complex)
        if self.model.symmetric:
            Q = self.O3.T @ P @ self.O3
            P1 = (Q[:r, :r] + Q[:r, :r].T) / 2.0
            L1 = solve_linear(P1.T, Q[r:, :r].T).T
            x = self._pack(P1, L1, None, np.zeros((n - r, n - r), dtype=complex))
        else:
            Q = self.O3.T @ P @ self.O4
            P1 = Q[:r, :r]
            L1 = solve_linear(P1.T, Q[r:, :r].T).T
            R1 = solve_linear(P1, Q[:r, r:])
            x = self._pack(P1, L1, R1, np.zeros((n - r, m - r), dtype=complex))

        cols = self.blocks["Lambda"]
        if cols.stop > cols.start:
            J = self.jacobian(x, params)[:, cols]
            F = self.residual(x, params)
            lam, *_ = np.linalg.lstsq(J, -F, rcond=None)
            x[cols] = lam
        return x, self.residual_norm(x, params)


def build_system(model: RankModel, patched: bool = False, rng_seed: int = 0) -> KernelSystem:
    """Create the kernel system for a model (raises InvalidModel when r = m = n)"""
    return KernelSystem(model, patched=patched, rng_seed=rng_seed)


def evaluate(system: KernelSystem, U, x: np.ndarray) -> np.ndarray:
    return system.residual(x, U)


def jacobian(system: KernelSystem, U, x: np.ndarray) -> np.ndarray:
    return system.jacobian(x, U)


def lift_to_matrix(system: KernelSystem, x: np.ndarray) -> ProbabilityMatrix:
    return system.lift(x)


def seed_solution(system: KernelSystem, rng_seed: int) -> Tuple[np.ndarray, np.ndarray]:
    return system.seed_solution(rng_seed)


def residual_norm(system: KernelSystem, U, x: np.ndarray) -> float:
    return system.residual_norm(x, U)


def try_refit(system: KernelSystem, P: np.ndarray, params) -> Optional[Tuple[np.ndarray, float]]:
    """refit that returns None when the chart cannot represent P"""
    try:
        return system.refit(P, params)
    except SingularMatrix:
        logger.debug("Chart of %r cannot represent the given matrix", system)
        return None
