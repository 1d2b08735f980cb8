"""
Data models for mlrank

Contains the shared statistical and numerical records so that the solver
modules can exchange them without circular imports.
"""

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .exceptions import InvalidModel
from .utils.checksum_utils import decode_complex_array, encode_complex_array


class Extremum(Enum):
    """Second-order type of a positive critical point"""
    MAX = "max"
    MIN = "min"
    SADDLE = "saddle"
    UNTESTED = "untested"


class PathStatus(Enum):
    """Outcome of tracking a single homotopy path"""
    SUCCESS = "success"
    DIVERGED = "diverged"
    MIN_STEP_REACHED = "min_step_reached"
    MAX_STEPS = "max_steps"


class MatchStatus(Enum):
    """Relation of an EM maximum to the positive critical points"""
    MATCHED = "matched"
    BOUNDARY = "boundary"
    # satisfies the critical equations, yet no critical point is close
    UNMATCHED = "unmatched"


def triangle_size(n: int) -> int:
    return n * (n + 1) // 2


def upper_triangle(matrix: np.ndarray) -> np.ndarray:
    """Row-major i <= j entries of a square matrix"""
    matrix = np.asarray(matrix)
    return matrix[np.triu_indices(matrix.shape[0])].copy()


def symmetric_from_triangle(values: np.ndarray, n: int) -> np.ndarray:
    """Full symmetric matrix whose upper triangle is `values`"""
    values = np.asarray(values)
    if values.shape != (triangle_size(n),):
        raise ValueError(f"Expected {triangle_size(n)} triangle entries for n = {n}, got {values.shape}")
    full = np.zeros((n, n), dtype=values.dtype)
    rows, cols = np.triu_indices(n)
    full[rows, cols] = values
    full[cols, rows] = values
    return full


def doubling_matrix(n: int) -> np.ndarray:
    """The n x n matrix D with 2 on the diagonal and 1 elsewhere"""
    return np.ones((n, n)) + np.eye(n)


def _triangle_order(n: int) -> int:
    """n such that n(n+1)/2 == length"""
    return int(round((np.sqrt(8 * n + 1) - 1) / 2))


@dataclass(frozen=True)
class RankModel:
    """The model of m x n probability matrices of rank at most r"""
    m: int
    n: int
    r: int
    symmetric: bool = False

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidModel(f"Matrix dimensions must be positive, got {self.m} x {self.n}")
        if self.symmetric and self.m != self.n:
            raise InvalidModel(f"Symmetric models need m == n, got {self.m} x {self.n}")
        if not 1 <= self.r <= min(self.m, self.n):
            raise InvalidModel(f"Rank {self.r} outside 1..{min(self.m, self.n)}")

    @property
    def codimension(self) -> int:
        return (self.m - self.r) * (self.n - self.r)

    @property
    def dual_rank(self) -> int:
        """Rank whose critical points pair with this one under ML duality"""
        return min(self.m, self.n) - self.r + 1

    @property
    def num_unknowns(self) -> int:
        return triangle_size(self.n) if self.symmetric else self.m * self.n

    def dual(self) -> "RankModel":
        return RankModel(self.m, self.n, self.dual_rank, self.symmetric)

    def transposed(self) -> "RankModel":
        return RankModel(self.n, self.m, self.r, self.symmetric)

    def label(self) -> str:
        if self.symmetric:
            return f"sym(n={self.n},r={self.r})"
        return f"({self.m},{self.n},{self.r})"

    def to_dict(self) -> Dict[str, Any]:
        return {"m": self.m, "n": self.n, "r": self.r, "symmetric": self.symmetric}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RankModel":
        return cls(m=int(data["m"]), n=int(data["n"]), r=int(data["r"]),
                   symmetric=bool(data.get("symmetric", False)))


class _TableMatrix:
    """
    Shared storage convention for data and probability matrices

    General matrices are stored as m x n arrays. Symmetric matrices are
    stored as their row-major upper triangle of length n(n+1)/2; the
    doubled-diagonal algebraic form is produced on demand only.
    """

    values: np.ndarray
    symmetric: bool

    @property
    def m(self) -> int:
        return self.n if self.symmetric else self.values.shape[0]

    @property
    def n(self) -> int:
        if self.symmetric:
            return _triangle_order(self.values.shape[0])
        return self.values.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.m, self.n)

    @property
    def matrix(self) -> np.ndarray:
        """Full matrix of cell values (mirrored when symmetric)"""
        if self.symmetric:
            return symmetric_from_triangle(self.values, self.n)
        return self.values.copy()

    @property
    def algebraic(self) -> np.ndarray:
        """Matrix entering the rank constraint: diagonal doubled when symmetric"""
        if self.symmetric:
            return self.matrix * doubling_matrix(self.n)
        return self.values.copy()

    @property
    def total(self):
        """Sum of the stored cells (u_++ or p_++)"""
        return self.values.sum()

    @property
    def row_sums(self) -> np.ndarray:
        return self.algebraic.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.algebraic.sum(axis=0)

    @staticmethod
    def _prepare(values, symmetric: bool, dtype) -> np.ndarray:
        array = np.array(values, dtype=dtype)
        if symmetric:
            if array.ndim == 2:
                if array.shape[0] != array.shape[1]:
                    raise ValueError(f"Symmetric input must be square, got {array.shape}")
                if not np.allclose(array, array.T, rtol=0.0, atol=1e-12 * max(1.0, np.max(np.abs(array)))):
                    raise ValueError("Symmetric input matrix is not symmetric")
                array = upper_triangle(array)
            elif array.ndim == 1:
                n = _triangle_order(array.shape[0])
                if triangle_size(n) != array.shape[0]:
                    raise ValueError(f"{array.shape[0]} is not a triangle number")
            else:
                raise ValueError(f"Symmetric input must be a matrix or triangle vector, got {array.shape}")
        elif array.ndim != 2 or array.size == 0:
            raise ValueError(f"Expected a non-empty 2-d matrix, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("Entries must be finite")
        array.setflags(write=False)
        return array


@dataclass(eq=False)
class DataMatrix(_TableMatrix):
    """Strictly positive table of counts (reals allowed)"""
    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        self.values = self._prepare(self.values, self.symmetric, float)
        if np.any(self.values <= 0):
            raise ValueError("Data matrix entries must be strictly positive")

    def scaled(self, factor: float) -> "DataMatrix":
        return DataMatrix(self.values * factor, self.symmetric)

    def transposed(self) -> "DataMatrix":
        if self.symmetric:
            return self
        return DataMatrix(self.values.T, False)

    def to_dict(self) -> Dict[str, Any]:
        return {"values": self.values.tolist(), "symmetric": self.symmetric}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DataMatrix":
        return cls(values=data["values"], symmetric=data.get("symmetric", False))


@dataclass(eq=False)
class ProbabilityMatrix(_TableMatrix):
    """Candidate probability table; complex entries allowed for critical points"""
    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        self.values = self._prepare(self.values, self.symmetric, complex)

    @classmethod
    def from_algebraic(cls, algebraic: np.ndarray, symmetric: bool) -> "ProbabilityMatrix":
        """Recover cell probabilities from the rank-constrained matrix"""
        algebraic = np.asarray(algebraic, dtype=complex)
        if symmetric:
            halved = algebraic / doubling_matrix(algebraic.shape[0])
            return cls(upper_triangle(halved), True)
        return cls(algebraic, False)

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag)))

    def is_real(self, rel_tol: float = 1e-8) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.values))))
        return self.max_imag() < rel_tol * scale

    def real_values(self) -> np.ndarray:
        return np.real(self.values).copy()

    def to_dict(self) -> Dict[str, Any]:
        return {"values": encode_complex_array(self.values), "symmetric": self.symmetric}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProbabilityMatrix":
        return cls(decode_complex_array(data["values"]), data.get("symmetric", False))


@dataclass(eq=False)
class PathResult:
    """Outcome of one tracked path"""
    status: PathStatus
    endpoint: np.ndarray
    steps: int = 0
    residual: float = float("inf")
    attempts: int = 1
    gamma: Optional[complex] = None

    @property
    def success(self) -> bool:
        return self.status == PathStatus.SUCCESS


@dataclass
class TraceTestResult:
    """Completeness verdict for a candidate solution set"""
    passed: bool
    residual: float
    witness_count: int = 0
    new_solutions: List[np.ndarray] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        residual = float(self.residual)
        return {"passed": self.passed, "residual": residual if np.isfinite(residual) else None}


@dataclass(eq=False)
class SolutionArchive:
    """Full solution set for one generic data matrix U0 (the preprocessing product)"""
    model: RankModel
    u0: np.ndarray
    solutions: List[np.ndarray]
    ml_degree: int
    seed: int
    trace_test: TraceTestResult = field(default_factory=lambda: TraceTestResult(False, float("inf")))
    tolerances: Dict[str, float] = field(default_factory=dict)
    created_at: datetime = field(default_factory=datetime.now)
    checksum: Optional[str] = None

    @property
    def complete(self) -> bool:
        return self.trace_test.passed

    def payload(self) -> Dict[str, Any]:
        """Checksummed part of the archive document"""
        return {
            "model": self.model.to_dict(),
            "u0": encode_complex_array(self.u0),
            "solutions": [encode_complex_array(x) for x in self.solutions],
            "ml_degree": int(self.ml_degree),
            "trace_test": self.trace_test.to_dict(),
            "seed": int(self.seed),
            "tolerances": {k: float(v) for k, v in sorted(self.tolerances.items())},
        }


@dataclass(eq=False)
class CriticalPoint:
    """A lifted critical point with its statistical flags"""
    P: ProbabilityMatrix
    log_likelihood: Optional[float]
    is_real: bool
    is_positive: bool
    numerical_rank: int
    extremum: Extremum = Extremum.UNTESTED
    newton_residual: float = 0.0
    multiplier_residual: Optional[float] = None
    rank_deficient: bool = False
    index: int = -1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "p": encode_complex_array(self.P.matrix) if not self.is_real else np.real(self.P.matrix).tolist(),
            "logL": self.log_likelihood if self.is_real else "nonreal",
            "real": self.is_real,
            "positive": self.is_positive,
            "rank": self.numerical_rank,
            "extremum": self.extremum.value,
            "residual": self.newton_residual,
        }


@dataclass(eq=False)
class DualityPairing:
    """Bijection between rank-r and dual-rank critical points"""
    pairs: List[Tuple[int, int]]
    max_residual: float
    omega: np.ndarray
    tolerance: float

    @property
    def verified(self) -> bool:
        return self.max_residual < self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {"pairs": [list(p) for p in self.pairs], "max_residual": self.max_residual,
                "tolerance": self.tolerance, "verified": self.verified}


@dataclass
class CertificationReport:
    """Newton-contraction and separation certificate for a point set"""
    certified: List[bool]
    contraction: List[float]
    min_separation: float
    violations: List[str] = field(default_factory=list)

    @property
    def all_certified(self) -> bool:
        return all(self.certified) and not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {"certified": sum(self.certified), "total": len(self.certified),
                "min_separation": self.min_separation, "violations": list(self.violations)}


@dataclass
class BoundReport:
    """Closed-form root count bounds for a model"""
    model: RankModel
    bezout: int
    multihomogeneous: int
    known_ml_degree: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"model": self.model.to_dict(), "bezout": self.bezout,
                "multihomogeneous": self.multihomogeneous, "known_ml_degree": self.known_ml_degree}


@dataclass(eq=False)
class MixtureParams:
    """Mixture parameters P = A diag(weights) B with stochastic factors"""
    A: np.ndarray
    weights: np.ndarray
    B: np.ndarray

    def lifted(self) -> np.ndarray:
        return (self.A * self.weights) @ self.B

    def validate(self, tol: float = 1e-12) -> bool:
        """True when the stochastic constraints hold to tol"""
        return bool(
            np.all(self.A >= -tol) and np.all(self.B >= -tol) and np.all(self.weights >= -tol)
            and np.allclose(self.A.sum(axis=0), 1.0, atol=tol, rtol=0.0)
            and np.allclose(self.B.sum(axis=1), 1.0, atol=tol, rtol=0.0)
            and abs(self.weights.sum() - 1.0) <= tol
        )


@dataclass(eq=False)
class EmResult:
    """One EM run (or one deduplicated cluster of runs)"""
    params: MixtureParams
    P: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    hits: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {"logL": self.log_likelihood, "iterations": self.iterations,
                "converged": self.converged, "hits": self.hits, "p": self.P.tolist()}


@dataclass
class EmMatch:
    """An EM maximum matched against the global critical-point list"""
    em_index: int
    critical_index: Optional[int]
    distance: float
    kernel_residual: float
    geometric_residual: float
    status: MatchStatus = MatchStatus.MATCHED

    @property
    def boundary(self) -> bool:
        return self.status == MatchStatus.BOUNDARY


@dataclass
class EmComparisonReport:
    """How EM maxima relate to the positive critical points"""
    matches: List[EmMatch]
    global_max_log_likelihood: Optional[float]
    best_em_log_likelihood: Optional[float]
    global_max_attained: bool
    attained_fraction: float

    @property
    def boundary_count(self) -> int:
        return sum(1 for m in self.matches if m.boundary)

    @property
    def unmatched_count(self) -> int:
        return sum(1 for m in self.matches if m.status == MatchStatus.UNMATCHED)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matches": [
                {"em": m.em_index, "critical": m.critical_index, "distance": m.distance,
                 "kernel_residual": m.kernel_residual, "geometric_residual": m.geometric_residual,
                 "status": m.status.value}
                for m in self.matches
            ],
            "global_max_logL": self.global_max_log_likelihood,
            "best_em_logL": self.best_em_log_likelihood,
            "global_max_attained": self.global_max_attained,
            "attained_fraction": self.attained_fraction,
        }


@dataclass
class DianaRow:
    """One row of the DiaNA family sweep"""
    a: float
    count_total: int
    count_real: int
    count_positive: int
    min_pairwise_distance: float
    mle_error: float
    argmax: Optional[np.ndarray] = None
    failed_paths: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {"a": self.a, "total": self.count_total, "real": self.count_real,
                "positive": self.count_positive, "min_distance": self.min_pairwise_distance,
                "mle_error": self.mle_error, "failed_paths": self.failed_paths}
