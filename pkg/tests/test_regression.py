"""
Regression tests for the preprocess-once, solve-fast workflow

Covers the solver facade with both stores, orientation handling, scaling
invariance, ML degrees of the larger models, duality on random tables and
the EM maxima of the 4 x 5 example end to end.
"""

import os
import shutil
import tempfile

import numpy as np
import pytest

from mlrank_sdk import CriticalPointSolver
from mlrank_sdk.classify import involution_sums, match_dual
from mlrank_sdk.config import SolverSettings
from mlrank_sdk.em import compare_em_vs_global, multistart_em, rank2_factorization
from mlrank_sdk.exceptions import ArchiveMismatch, InvalidModel
from mlrank_sdk.likelihood import full_rank_mle
from mlrank_sdk.models import DataMatrix, Extremum, MatchStatus, RankModel
from mlrank_sdk.monodromy import MonodromyOptions, archive_residuals, monodromy_solve
from mlrank_sdk.store import archive_key


def settings(temp_dir):
    return SolverSettings(archive_dir=os.path.join(temp_dir, "archives"),
                          db_path=os.path.join(temp_dir, "archives.db"), threads=1, seed=0)


def random_table(seed, shape=(3, 3)):
    """Positive integer counts"""
    return DataMatrix(np.random.default_rng([seed, 17]).integers(1, 50, size=shape).astype(float))


class TestSolverRegression:
    """Regression tests for CriticalPointSolver"""

    def setup_method(self):
        """Set up test environment"""
        self.temp_dir = tempfile.mkdtemp()
        self.U = DataMatrix([[3, 7, 2], [5, 1, 8], [4, 6, 9]])

    def teardown_method(self):
        """Clean up test environment"""
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    def test_initialization(self):
        """Test store selection from arguments and settings"""
        solver = CriticalPointSolver(settings=settings(self.temp_dir))
        assert solver.store_type == "json"

        solver = CriticalPointSolver(store_type="sqlite", settings=settings(self.temp_dir))
        assert solver.store_type == "sqlite"
        assert os.path.exists(os.path.join(self.temp_dir, "archives.db"))

    @pytest.mark.parametrize("store_type", ["json", "sqlite"])
    def test_preprocess_then_load(self, store_type):
        """Test that preprocessing stores the archive and later runs reuse it"""
        solver = CriticalPointSolver(store_type=store_type, settings=settings(self.temp_dir))
        model = RankModel(3, 3, 1)

        archive = solver.preprocess(model, seed=0, options=MonodromyOptions(threads=1))
        loaded = solver.get_archive(model, seed=0)

        assert archive.ml_degree == 1
        assert loaded.checksum == archive.checksum
        assert solver.store.list_archives() == [archive_key(model, 0)]

    def test_solve_rank_one(self, archive_331):
        solver = CriticalPointSolver(settings=settings(self.temp_dir))

        report = solver.solve(self.U, 1, archive=archive_331)

        assert report.summary["total"] == 1
        assert report.summary["positive"] == 1
        assert report.points[0].extremum == Extremum.MAX
        assert report.archive_checksum == archive_331.checksum

    def test_solve_rank_two(self, archive_332):
        solver = CriticalPointSolver(settings=settings(self.temp_dir))

        report = solver.solve(self.U, 2, archive=archive_332, seed=3)

        assert report.summary["total"] == 10
        assert report.failed_paths == 0
        assert all(p.newton_residual < 1e-9 for p in report.points)
        logls = [p.log_likelihood for p in report.positive]
        assert logls == sorted(logls, reverse=True)

    def test_scaling_invariance(self, archive_332):
        """Test that scaling the data leaves the critical points unchanged"""
        solver = CriticalPointSolver(settings=settings(self.temp_dir))

        first = solver.solve(self.U, 2, archive=archive_332)
        second = solver.solve(self.U.scaled(7.0), 2, archive=archive_332)

        assert len(first.positive) == len(second.positive)
        for p, q in zip(first.positive, second.positive):
            assert np.allclose(p.P.values, q.P.values, atol=1e-8)

    def test_seed_independence(self, archive_332):
        """Test that the homotopy seed does not change the solution set"""
        solver = CriticalPointSolver(settings=settings(self.temp_dir))

        first = solver.solve(self.U, 2, archive=archive_332, seed=1)
        second = solver.solve(self.U, 2, archive=archive_332, seed=2)

        assert [p.log_likelihood for p in first.positive] == pytest.approx(
            [p.log_likelihood for p in second.positive], abs=1e-8)

    def test_vacuous_rank_on_tall_data(self):
        """Test that r = min(m, n) returns U / u_++ in the caller's orientation"""
        U = DataMatrix([[1, 2, 3], [4, 5, 6], [7, 8, 10], [2, 2, 2]])
        solver = CriticalPointSolver(settings=settings(self.temp_dir))

        report = solver.solve(U, 3)

        assert report.transposed
        assert report.points[0].P.shape == (4, 3)
        assert np.allclose(report.points[0].P.values, full_rank_mle(U).values)

    def test_archive_mismatch(self, archive_331):
        solver = CriticalPointSolver(settings=settings(self.temp_dir))

        with pytest.raises(ArchiveMismatch):
            solver.solve(self.U, 2, archive=archive_331)

    def test_certify_vacuous_rank(self):
        solver = CriticalPointSolver(settings=settings(self.temp_dir))

        with pytest.raises(InvalidModel):
            solver.certify(self.U, 3)

    def test_certify(self, archive_332):
        solver = CriticalPointSolver(settings=settings(self.temp_dir))

        report = solver.certify(self.U, 2, archive=archive_332)

        assert report.all_certified
        assert len(report.certified) == 10


class TestEmComparison:
    """Regression tests relating EM maxima to the critical points"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()
        self.U = DataMatrix([[3, 7, 2], [5, 1, 8], [4, 6, 9]])

    def teardown_method(self):
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    def test_em_never_beats_global(self, archive_332):
        solver = CriticalPointSolver(settings=settings(self.temp_dir))
        points = solver.solve(self.U, 2, archive=archive_332).points
        maxima = multistart_em(self.U, 2, 30, seed=0, threads=1)

        report = compare_em_vs_global(self.U, 2, maxima, points)

        assert len(report.matches) == len(maxima)
        assert report.global_max_log_likelihood is not None
        assert report.best_em_log_likelihood <= report.global_max_log_likelihood + 1e-8
        for match, result in zip(report.matches, maxima):
            assert match.status == MatchStatus.MATCHED
            point = points[match.critical_index]
            assert point.is_positive
            assert point.extremum == Extremum.MAX
            assert point.log_likelihood == pytest.approx(result.log_likelihood, abs=1e-6)

    @pytest.mark.parametrize("seed", range(10))
    def test_em_finds_global_maximum_on_random_tables(self, archive_332, seed):
        """Test that every EM maximum is a positive local maximum and the best one is global"""
        U = random_table(seed)
        solver = CriticalPointSolver(settings=settings(self.temp_dir))
        points = solver.solve(U, 2, archive=archive_332, seed=seed).points
        maxima = multistart_em(U, 2, 30, seed=seed, threads=1)

        report = compare_em_vs_global(U, 2, maxima, points)

        assert maxima
        for match in report.matches:
            assert match.status == MatchStatus.MATCHED
            assert match.distance < 1e-4
            assert points[match.critical_index].is_positive
            assert points[match.critical_index].extremum == Extremum.MAX
        assert report.best_em_log_likelihood == pytest.approx(report.global_max_log_likelihood, abs=1e-8)
        assert report.global_max_attained

    def test_rank_one_always_attained(self, archive_331):
        solver = CriticalPointSolver(settings=settings(self.temp_dir))
        points = solver.solve(self.U, 1, archive=archive_331).points
        maxima = multistart_em(self.U, 1, 4, seed=0, threads=1)

        report = compare_em_vs_global(self.U, 1, maxima, points)

        assert report.global_max_attained
        assert report.attained_fraction == 1.0
        assert report.boundary_count == 0


class TestRandomDuality:
    """Test that 3 x 3 rank 2 pairs its critical points with themselves"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    @pytest.mark.parametrize("seed", range(25))
    def test_self_pairing(self, archive_332, seed):
        U = random_table(100 + seed)
        solver = CriticalPointSolver(settings=settings(self.temp_dir))
        points = solver.solve(U, 2, archive=archive_332, seed=seed).points

        pairing = match_dual(points, points, U)

        assert len(points) == 10
        assert pairing.max_residual < 1e-8
        assert sorted(j for _, j in pairing.pairs) == list(range(10))
        for i, j in pairing.pairs:
            assert points[i].is_real == points[j].is_real
            assert points[i].is_positive == points[j].is_positive
            assert (j, i) in pairing.pairs
        sums = involution_sums(points)
        assert sums == pytest.approx([sums[0]] * len(sums), rel=1e-8)


class TestLargerModels:
    """Test ML degrees that need many monodromy loops"""

    @pytest.mark.parametrize("model, degree", [
        (RankModel(3, 4, 2), 26),
        (RankModel(3, 5, 2), 58),
        (RankModel(4, 4, 2, symmetric=True), 37),
        (RankModel(4, 4, 3, symmetric=True), 37),
    ], ids=lambda value: value.label() if isinstance(value, RankModel) else str(value))
    def test_ml_degree(self, model, degree):
        archive = monodromy_solve(model, MonodromyOptions(threads=2), rng_seed=0)

        assert archive.ml_degree == degree
        assert archive.complete
        assert archive.trace_test.passed
        assert max(archive_residuals(archive)) < 1e-10


# log-likelihoods of the distinct EM maxima on the 4 x 5 example, best first
RANK_TWO_MAXIMA = [-105973.49, -106487.35, -109697.04, -111172.67, -127069.50, -131013.73, -148501.63]
RANK_THREE_INTERIOR = [-84649.67679, -86583.69000, -87698.20128, -98171.25551, -102495.4349, -121802.8945]
RANK_THREE_BOUNDARY = [-105973.4859, -111172.6663]


def near_any(value, targets, tol=0.01):
    return any(abs(value - target) <= tol for target in targets)


class TestEmExample:
    """Test the EM maxima of the 4 x 5 table with strongly dominant diagonal"""

    def test_rank_two_maxima(self, example_data):
        maxima = multistart_em(example_data, 2, 300, seed=0, threads=2)

        assert [res.log_likelihood for res in maxima] == pytest.approx(RANK_TWO_MAXIMA, abs=0.01)
        assert all(res.converged for res in maxima)
        assert maxima[0].P[2, 2] == pytest.approx(0.5447, abs=1e-4)
        for res in maxima:
            factors = rank2_factorization(res.P)
            assert np.allclose(factors.lifted(), res.P, atol=1e-8)

    def test_rank_three_boundary_maxima(self, example_data):
        """Test that maxima off the likelihood equations are labelled boundary"""
        maxima = multistart_em(example_data, 3, 300, seed=0, threads=2)

        report = compare_em_vs_global(example_data, 3, maxima, [])

        assert maxima[0].log_likelihood == pytest.approx(RANK_THREE_INTERIOR[0], abs=0.01)
        assert report.boundary_count >= 1
        for match, res in zip(report.matches, maxima):
            if near_any(res.log_likelihood, RANK_THREE_BOUNDARY):
                assert match.status == MatchStatus.BOUNDARY
            elif near_any(res.log_likelihood, RANK_THREE_INTERIOR):
                assert match.status == MatchStatus.UNMATCHED
                assert match.kernel_residual <= 1e-3
