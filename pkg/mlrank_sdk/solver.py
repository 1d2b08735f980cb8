"""
Core solver for mlrank

Provides CriticalPointSolver, which ties the archive store, monodromy
preprocessing, parameter homotopies and classification into the
preprocess-once, solve-fast workflow.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .classify import certify_distinct, classify_matrix, classify_point, match_dual
from .config import SolverSettings
from .exceptions import ArchiveMismatch, InvalidModel
from .likelihood import full_rank_mle
from .models import (
    CertificationReport,
    CriticalPoint,
    DataMatrix,
    DualityPairing,
    Extremum,
    ProbabilityMatrix,
    RankModel,
    SolutionArchive,
)
from .monodromy import MonodromyOptions, monodromy_solve, transport_archive
from .store.base_store import archive_key
from .store.store_factory import ArchiveStoreFactory
from .tracker import TrackerOptions, newton_refine

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class SolveReport:
    """All critical points of one data matrix"""
    model: RankModel
    points: List[CriticalPoint]
    failed_paths: int = 0
    archive_checksum: Optional[str] = None
    transposed: bool = False
    solutions: List[np.ndarray] = field(default_factory=list)

    @property
    def positive(self) -> List[CriticalPoint]:
        """Positive points by decreasing log-likelihood"""
        return sorted((p for p in self.points if p.is_positive), key=lambda p: p.log_likelihood, reverse=True)

    @property
    def summary(self) -> Dict[str, int]:
        return {
            "total": len(self.points),
            "real": sum(1 for p in self.points if p.is_real),
            "positive": sum(1 for p in self.points if p.is_positive),
            "max": sum(1 for p in self.points if p.extremum == Extremum.MAX),
            "min": sum(1 for p in self.points if p.extremum == Extremum.MIN),
            "saddle": sum(1 for p in self.points if p.extremum == Extremum.SADDLE),
            "failed_paths": self.failed_paths,
        }


def _transpose_point(point: CriticalPoint) -> CriticalPoint:
    point.P = ProbabilityMatrix(point.P.values.T, False)
    return point


class CriticalPointSolver:
    """Main entry point: preprocess rank models once, then solve any data matrix"""

    def __init__(self, store_type: Optional[str] = None, settings: Optional[SolverSettings] = None,
                 **store_kwargs):
        """
        Initialize the solver

        Args:
            store_type: archive backend ('json', 'sqlite', or None for the configured default)
            settings: process defaults (read from the environment when omitted)
            **store_kwargs: arguments for the store (archive_dir or db_path)
        """
        self.settings = settings or SolverSettings.from_env()
        store_type = (store_type or self.settings.store_type).lower()
        if not store_kwargs:
            if store_type == "sqlite":
                store_kwargs = {"db_path": self.settings.db_path}
            else:
                store_kwargs = {"archive_dir": self.settings.archive_dir}
        self._store = ArchiveStoreFactory.create_store(store_type, **store_kwargs)
        self.store_type = store_type

    @property
    def store(self):
        return self._store

    # ------------------------------------------------------------------
    # preprocessing

    def preprocess(self, model: RankModel, seed: Optional[int] = None, options: Optional[MonodromyOptions] = None,
                   deep: bool = False, save: bool = True) -> SolutionArchive:
        """
        Solve a random complex instance of the model by monodromy and store it

        The archive is returned even when the trace test did not pass; check
        archive.complete.
        """
        seed = self.settings.seed if seed is None else seed
        if options is None:
            options = MonodromyOptions.deep() if deep else MonodromyOptions()
        if options.threads is None:
            options.threads = self.settings.threads
        archive = monodromy_solve(model, options, seed, raise_on_incomplete=False)
        if save:
            key = archive_key(model, seed)
            if not self._store.save_archive(archive, key):
                logger.warning("Could not store archive %s", key)
        return archive

    def get_archive(self, model: RankModel, seed: Optional[int] = None, deep: bool = False) -> SolutionArchive:
        """Stored archive for the model, preprocessing it first if needed"""
        seed = self.settings.seed if seed is None else seed
        archive = self._store.load_archive(archive_key(model, seed))
        if archive is None:
            logger.info("No stored archive for %s; preprocessing", model.label())
            archive = self.preprocess(model, seed, deep=deep)
        return archive

    # ------------------------------------------------------------------
    # solving

    def _problem(self, U: DataMatrix, r: int):
        """Model and data in the orientation the kernel system expects"""
        if not U.symmetric and U.m > U.n:
            return RankModel(U.n, U.m, r), U.transposed(), True
        return RankModel(U.m, U.n, r, U.symmetric), U, False

    def solve(self, U: DataMatrix, r: int, archive: Optional[SolutionArchive] = None, seed: Optional[int] = None,
              tracker: Optional[TrackerOptions] = None) -> SolveReport:
        """
        Every critical point of the rank-r likelihood for data U

        Args:
            U: data table (m > n is solved on the transpose)
            r: rank bound
            archive: preprocessed archive (loaded or built when omitted)
            seed: seed for the chart and gamma
            tracker: tracker settings

        Returns:
            SolveReport with classified points in archive order

        Raises:
            ArchiveMismatch: archive model differs from (m, n, r, symmetric)
            PathFailure: more than 10% of paths failed
        """
        seed = self.settings.seed if seed is None else seed
        model, data, transposed = self._problem(U, r)

        if model.r == model.m:
            # the rank bound is vacuous
            point = classify_matrix(data, full_rank_mle(data), model.r, index=0)
            report = SolveReport(model, [point], transposed=transposed)
        else:
            archive = archive or self.get_archive(model, seed)
            if archive.model != model:
                raise ArchiveMismatch(f"Archive is for {archive.model.label()}, data needs {model.label()}")
            if not archive.complete:
                logger.warning("Archive for %s did not pass the trace test; results may be incomplete",
                               model.label())
            system, results = transport_archive(archive, data, seed, tracker, self.settings.threads)
            params = system.as_parameter(data)
            points, solutions, failed = [], [], 0
            for index, result in enumerate(results):
                if not result.success:
                    failed += 1
                    continue
                x, _, _ = newton_refine(system, result.endpoint, params)
                solutions.append(x)
                points.append(classify_point(data, x, system, index))
            report = SolveReport(model, points, failed, archive.checksum, transposed, solutions)

        if transposed:
            report.points = [_transpose_point(p) for p in report.points]
        logger.info("Solved %s: %s", model.label(), report.summary)
        return report

    def duality(self, U: DataMatrix, r: int, archive: Optional[SolutionArchive] = None,
                dual_archive: Optional[SolutionArchive] = None, seed: Optional[int] = None,
                rel_tolerance: float = 1e-8, tracker: Optional[TrackerOptions] = None) -> DualityPairing:
        """
        Pair the rank-r critical points with those of the dual rank

        Raises:
            NoBijection: the two point sets cannot be paired
        """
        model, _, _ = self._problem(U, r)
        first = self.solve(U, r, archive, seed, tracker)
        second = first if model.dual_rank == r else self.solve(U, model.dual_rank, dual_archive, seed, tracker)
        return match_dual(first.points, second.points, U, rel_tolerance)

    def certify(self, U: DataMatrix, r: int, archive: Optional[SolutionArchive] = None,
                seed: Optional[int] = None, tracker: Optional[TrackerOptions] = None) -> CertificationReport:
        """Newton-contraction and separation certificate for the solutions at U"""
        seed = self.settings.seed if seed is None else seed
        model, data, _ = self._problem(U, r)
        if model.r == model.m:
            raise InvalidModel("Nothing to certify: the critical point is U / u_++")
        archive = archive or self.get_archive(model, seed)
        system, results = transport_archive(archive, data, seed, tracker, self.settings.threads)
        solutions = [result.endpoint for result in results if result.success]
        return certify_distinct(solutions, system, system.as_parameter(data))
