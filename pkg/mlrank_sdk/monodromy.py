"""
Monodromy solving for mlrank

Builds the complete set of critical points for one generic complex data
matrix U0: start from a constructed solution, move the data around random
triangular loops, collect every new endpoint, and stop once a trace test
certifies that nothing is missing. The result is a SolutionArchive that
later solves reuse through a single parameter homotopy.
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .exceptions import CorruptArchive, SchemaMismatch, SingularMatrix, TraceTestFailed
from .formulation.base_system import ParametricSystem
from .formulation.kernel_system import KernelSystem, build_system
from .formulation.pencil_system import SlicedSystem
from .models import RankModel, SolutionArchive, TraceTestResult
from .tracker import TrackerOptions, newton_refine, transport_solutions
from .utils.checksum_utils import decode_complex_array, payload_checksum
from .utils.linalg_utils import random_complex, random_unit_complex

logger = logging.getLogger(__name__)

ARCHIVE_VERSION = 1
ARCHIVE_RESIDUAL = 1e-10


@dataclass
class MonodromyOptions:
    """Loop budget, dedup and trace-test settings"""
    stall_loops: int = 10
    max_loops: int = 500
    dedup_tolerance: float = 1e-6
    trace_offsets: tuple = (0.1, 0.2)
    trace_tolerance: float = 1e-6
    witness_stall_loops: int = 5
    patched: bool = False
    threads: Optional[int] = None
    tracker: TrackerOptions = field(default_factory=TrackerOptions)

    def __post_init__(self):
        if self.stall_loops < 1 or self.max_loops < 1:
            raise ValueError("Loop counts must be positive")
        if self.dedup_tolerance <= 0 or self.trace_tolerance <= 0:
            raise ValueError("Tolerances must be positive")
        if len(self.trace_offsets) != 2 or self.trace_offsets[0] == self.trace_offsets[1]:
            raise ValueError("trace_offsets needs two distinct values")

    @classmethod
    def deep(cls, **overrides) -> "MonodromyOptions":
        """Larger budgets for the (4,4,.), (4,5,.) and symmetric n = 5 models"""
        values = {"stall_loops": 25, "max_loops": 5000, "witness_stall_loops": 10}
        values.update(overrides)
        return cls(**values)

    def lenient_tracker(self) -> TrackerOptions:
        """Tracker settings that report failed paths instead of raising"""
        return replace(self.tracker, max_failure_fraction=1.0)


class SolutionSet:
    """Solutions kept apart by the relative distance of their fingerprints"""

    def __init__(self, system: ParametricSystem, tolerance: float):
        self.system = system
        self.tolerance = tolerance
        self.points: List[np.ndarray] = []
        self._keys: List[np.ndarray] = []

    def __len__(self) -> int:
        return len(self.points)

    def _distance(self, a: np.ndarray, b: np.ndarray) -> float:
        scale = max(1.0, float(np.linalg.norm(a)), float(np.linalg.norm(b)))
        return float(np.linalg.norm(a - b)) / scale

    def contains(self, x: np.ndarray) -> bool:
        key = self.system.fingerprint(x)
        return any(self._distance(key, other) <= self.tolerance for other in self._keys)

    def add(self, x: np.ndarray) -> bool:
        """Insert x unless an equal solution is already present"""
        if self.contains(x):
            return False
        self.points.append(np.array(x, dtype=complex))
        self._keys.append(self.system.fingerprint(x))
        return True

    def min_separation(self) -> float:
        best = float("inf")
        for i in range(len(self._keys)):
            for j in range(i + 1, len(self._keys)):
                best = min(best, self._distance(self._keys[i], self._keys[j]))
        return best


def _endpoints(results, system: ParametricSystem, params, tolerance: float) -> List[np.ndarray]:
    points = []
    for result in results:
        if not result.success:
            continue
        x, residual, converged = newton_refine(system, result.endpoint, params, tolerance=tolerance)
        if converged:
            points.append(x)
    return points


def _random_slice(rng: np.random.Generator) -> np.ndarray:
    return np.array([1.0 + 0.5 * random_complex((), rng), random_complex((), rng)], dtype=complex)


def _complete_witness_set(sliced: SlicedSystem, witness: SolutionSet, q1: np.ndarray,
                          rng: np.random.Generator, options: MonodromyOptions, seed: int) -> None:
    """Monodromy loops in slice-parameter space until the witness set saturates"""
    tracker = options.lenient_tracker()
    tolerance = tracker.endpoint_tolerance
    stall = 0
    for loop in range(options.max_loops):
        if stall >= options.witness_stall_loops or not witness.points:
            return
        qa, qb = _random_slice(rng), _random_slice(rng)
        current = list(witness.points)
        for leg, (start, end) in enumerate(((q1, qa), (qa, qb), (qb, q1))):
            results = transport_solutions(sliced, start, current, end, seed + 7919 * loop + leg,
                                          tracker, options.threads)
            current = _endpoints(results, sliced, end, tolerance)
        added = sum(witness.add(x) for x in current)
        stall = 0 if added else stall + 1
        logger.debug("Witness loop %d added %d points (total %d)", loop, added, len(witness))


def trace_test(system: KernelSystem, U0, solutions: Sequence[np.ndarray], rng_seed: int,
               options: Optional[MonodromyOptions] = None) -> TraceTestResult:
    """
    Check that a candidate solution set at U0 is complete

    The solutions at U0 are the fiber over s = 0 of the curve of solutions
    along the data line U0 + sV. The fiber is carried to a generic
    hyperplane section of that curve, the section is completed by
    monodromy, and the sum of its points is checked to move affinely along
    a pencil of parallel sections. Finally every section point is carried
    back to s = 0; any endpoint missing from the candidates is reported.

    Args:
        system: kernel system
        U0: data matrix the candidates solve
        solutions: candidate set
        rng_seed: seed for the direction, slices and gammas
        options: monodromy settings

    Returns:
        TraceTestResult; passed requires an affine trace and no new solutions
    """
    options = options or MonodromyOptions()
    tracker = options.lenient_tracker()
    U0 = system.as_parameter(U0)
    rng = np.random.default_rng([rng_seed, 2])

    V = rng.standard_normal(U0.shape)
    if system.model.symmetric:
        V = (V + V.T) / 2.0
    V *= max(1.0, float(np.linalg.norm(U0))) / np.linalg.norm(V)
    form = random_complex(system.num_unknowns, rng) / np.sqrt(system.num_unknowns)
    sliced = SlicedSystem(system, U0, V, form)

    q0 = np.zeros(2, dtype=complex)
    c = 0.5 * random_unit_complex(rng)
    q1 = np.array([1.0, c], dtype=complex)
    tolerance = tracker.endpoint_tolerance

    results = transport_solutions(sliced, q0, list(solutions), q1, rng_seed, tracker, options.threads)
    witness = SolutionSet(sliced, options.dedup_tolerance)
    for x in _endpoints(results, sliced, q1, tolerance):
        witness.add(x)
    _complete_witness_set(sliced, witness, q1, rng, options, rng_seed)

    sums = [np.sum(witness.points, axis=0) if witness.points else np.zeros(system.num_unknowns, dtype=complex)]
    complete_transport = True
    for k, offset in enumerate(options.trace_offsets):
        target = np.array([1.0, c + offset], dtype=complex)
        moved = transport_solutions(sliced, q1, witness.points, target, rng_seed + 101 + k, tracker,
                                    options.threads)
        points = _endpoints(moved, sliced, target, tolerance)
        if len(points) != len(witness):
            complete_transport = False
        sums.append(np.sum(points, axis=0) if points else np.zeros_like(sums[0]))

    s1, s2 = options.trace_offsets
    predicted = sums[0] + (s1 / s2) * (sums[2] - sums[0])
    scale = max(1.0, max(float(np.max(np.abs(total))) for total in sums))
    defect = float(np.max(np.abs(sums[1] - predicted))) / scale
    if not complete_transport:
        logger.warning("Trace test lost witness points while moving the section")
        defect = float("inf")

    back = transport_solutions(sliced, q1, witness.points, q0, rng_seed + 211, tracker, options.threads)
    candidates = SolutionSet(system, options.dedup_tolerance)
    for x in solutions:
        candidates.add(x)
    new_solutions: List[np.ndarray] = []
    for x in _endpoints(back, system, U0, tolerance):
        if candidates.add(x):
            new_solutions.append(x)

    passed = defect < options.trace_tolerance and not new_solutions
    logger.info("Trace test: %d witness points, defect %.2e, %d new solutions, %s",
                len(witness), defect, len(new_solutions), "passed" if passed else "failed")
    return TraceTestResult(passed=passed, residual=defect, witness_count=len(witness),
                           new_solutions=new_solutions)


def _loop_parameters(system: KernelSystem, rng: np.random.Generator, scale: float):
    return system.random_parameter(rng, scale), system.random_parameter(rng, scale)


def to_canonical_chart(system: KernelSystem, solutions: Sequence[np.ndarray], U) -> List[np.ndarray]:
    """Re-express solutions in the unpatched chart stored by archives"""
    if not system.patched:
        return [np.array(x, dtype=complex) for x in solutions]
    canonical = build_system(system.model, patched=False)
    return convert_solutions(system, canonical, solutions, U)


def convert_solutions(source: KernelSystem, target: KernelSystem, solutions: Sequence[np.ndarray],
                      U) -> List[np.ndarray]:
    """
    Move solutions between charts of the same model via their matrices P

    Raises:
        SingularMatrix: if some solution has no coordinates in the target chart
    """
    converted = []
    for index, x in enumerate(solutions):
        try:
            y, _ = target.refit(source.algebraic_matrix(x), U)
        except SingularMatrix as e:
            logger.error("Solution %d of %d cannot be expressed in the target chart", index, len(solutions))
            raise SingularMatrix(f"Chart change failed for solution {index}: {e}") from e
        y, residual, converged = newton_refine(target, y, U, tolerance=ARCHIVE_RESIDUAL / 10)
        if not converged:
            logger.warning("Solution %d has residual %.2e after chart change", index, residual)
        converted.append(y)
    return converted


def monodromy_solve(model: RankModel, options: Optional[MonodromyOptions] = None, rng_seed: int = 0,
                    raise_on_incomplete: bool = True) -> SolutionArchive:
    """
    Compute every critical point for a random complex data matrix

    Args:
        model: rank model (r < m, or r = m < n)
        options: loop budgets and tolerances
        rng_seed: master seed
        raise_on_incomplete: raise TraceTestFailed when the loop budget runs
            out; otherwise return the archive flagged incomplete

    Returns:
        SolutionArchive in the unpatched chart

    Raises:
        TraceTestFailed: completeness not certified (the archive is attached)
    """
    options = options or MonodromyOptions()
    tracker = options.lenient_tracker()
    system = build_system(model, patched=options.patched, rng_seed=rng_seed)
    x0, U0 = system.seed_solution(rng_seed)
    rng = np.random.default_rng([rng_seed, 1])
    scale = max(1.0, float(np.max(np.abs(U0))))

    found = SolutionSet(system, options.dedup_tolerance)
    found.add(x0)
    result = TraceTestResult(False, float("inf"))
    stall = 0
    loops = 0
    while loops < options.max_loops:
        if stall >= options.stall_loops:
            result = trace_test(system, U0, found.points, rng_seed + loops, options)
            if result.passed:
                break
            for x in result.new_solutions:
                found.add(x)
            stall = 0

        A, B = _loop_parameters(system, rng, scale)
        current = list(found.points)
        for leg, (start, end) in enumerate(((U0, A), (A, B), (B, U0))):
            leg_seed = int(rng.integers(0, 2 ** 31 - 1))
            results = transport_solutions(system, start, current, end, leg_seed, tracker, options.threads)
            current = _endpoints(results, system, end, tracker.endpoint_tolerance)
        added = sum(found.add(x) for x in current)
        loops += 1
        stall = 0 if added else stall + 1
        logger.info("Monodromy loop %d: +%d solutions, %d total", loops, added, len(found))

    if not result.passed and loops >= options.max_loops:
        logger.warning("Loop budget of %d exhausted for %s", options.max_loops, model.label())

    archive = SolutionArchive(
        model=model,
        u0=np.array(U0, dtype=complex),
        solutions=to_canonical_chart(system, found.points, U0),
        ml_degree=len(found),
        seed=rng_seed,
        trace_test=result,
        tolerances={
            "dedup": options.dedup_tolerance,
            "trace": options.trace_tolerance,
            "endpoint": options.tracker.endpoint_tolerance,
        },
    )
    archive.checksum = payload_checksum(archive.payload())
    if not result.passed and raise_on_incomplete:
        raise TraceTestFailed(f"Trace test did not pass for {model.label()} after {loops} loops", archive)
    return archive


def transport_archive(archive: SolutionArchive, U, rng_seed: int = 0, tracker: Optional[TrackerOptions] = None,
                      threads: Optional[int] = None, patched: bool = True):
    """
    Carry every archived solution from U0 to new data with one homotopy

    Args:
        archive: preprocessed solution set
        U: target data (DataMatrix or complex matrix)
        rng_seed: seed for the chart and the gamma
        tracker: tracker settings
        threads: worker threads
        patched: track in a random chart

    Returns:
        Tuple of (system, list of PathResult in archive order)

    Raises:
        PathFailure: more than the allowed fraction of paths failed
    """
    canonical = build_system(archive.model, patched=False)
    if patched:
        system = build_system(archive.model, patched=True, rng_seed=rng_seed)
        starts = convert_solutions(canonical, system, archive.solutions, archive.u0)
    else:
        system = canonical
        starts = list(archive.solutions)
    results = transport_solutions(system, archive.u0, starts, U, rng_seed, tracker, threads)
    logger.info("Transported %d archived solutions, %d successful", len(results),
                sum(1 for r in results if r.success))
    return system, results


def archive_residuals(archive: SolutionArchive) -> List[float]:
    """Scaled residual of every archived solution at U0"""
    system = build_system(archive.model, patched=False)
    return [system.residual_norm(x, archive.u0) for x in archive.solutions]


# ----------------------------------------------------------------------
# archive documents


def archive_to_document(archive: SolutionArchive) -> Dict[str, Any]:
    """JSON-ready document with version and checksum"""
    payload = archive.payload()
    checksum = payload_checksum(payload)
    archive.checksum = checksum
    document = {"version": ARCHIVE_VERSION}
    document.update(payload)
    document["created_at"] = archive.created_at.isoformat()
    document["sha256"] = checksum
    return document


def _residual_value(value) -> float:
    return float("inf") if value is None else float(value)


def archive_from_document(document: Dict[str, Any]) -> SolutionArchive:
    """
    Rebuild an archive from its document

    Raises:
        SchemaMismatch: wrong version or missing fields
        CorruptArchive: checksum does not match the payload
    """
    if not isinstance(document, dict):
        raise SchemaMismatch("Archive document must be a JSON object")
    version = document.get("version")
    if version != ARCHIVE_VERSION:
        raise SchemaMismatch(f"Archive version {version!r} is not supported (expected {ARCHIVE_VERSION})")
    required = ("model", "u0", "solutions", "ml_degree", "trace_test", "seed", "sha256")
    missing = [name for name in required if name not in document]
    if missing:
        raise SchemaMismatch(f"Archive is missing fields: {', '.join(missing)}")

    try:
        archive = SolutionArchive(
            model=RankModel.from_dict(document["model"]),
            u0=decode_complex_array(document["u0"]),
            solutions=[decode_complex_array(x) for x in document["solutions"]],
            ml_degree=int(document["ml_degree"]),
            seed=int(document["seed"]),
            trace_test=TraceTestResult(bool(document["trace_test"]["passed"]),
                                       _residual_value(document["trace_test"]["residual"])),
            tolerances={k: float(v) for k, v in document.get("tolerances", {}).items()},
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaMismatch(f"Archive fields are malformed: {e}")
    if "created_at" in document:
        archive.created_at = datetime.fromisoformat(document["created_at"])

    if payload_checksum(archive.payload()) != document["sha256"]:
        raise CorruptArchive("Archive checksum does not match its contents")
    archive.checksum = document["sha256"]
    return archive


def save_archive(archive: SolutionArchive, path: str) -> None:
    """Write an archive as a single JSON file"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    document = archive_to_document(archive)
    with open(path, "w") as f:
        json.dump(document, f, indent=1, allow_nan=False)
    logger.info("Saved %s archive with %d solutions to %s", archive.model.label(), len(archive.solutions), path)


def load_archive(path: str) -> SolutionArchive:
    """
    Read an archive file written by save_archive

    Raises:
        SchemaMismatch: unreadable JSON, wrong version or missing fields
        CorruptArchive: checksum mismatch
    """
    with open(path, "r") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaMismatch(f"Archive {path} is not valid JSON: {e}")
    archive = archive_from_document(document)
    logger.info("Loaded %s archive with %d solutions from %s", archive.model.label(), len(archive.solutions), path)
    return archive
