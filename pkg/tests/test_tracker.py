"""
Tests for homotopy arcs, Newton refinement and path tracking
"""

import numpy as np
import pytest

from mlrank_sdk.exceptions import PathFailure
from mlrank_sdk.formulation import ParametricSystem, build_system, seed_solution
from mlrank_sdk.models import PathStatus, RankModel
from mlrank_sdk.tracker import (
    HomotopyArc,
    TrackerOptions,
    newton_refine,
    retry_gamma,
    track_path,
    transport_solutions,
)


class SquareRoot(ParametricSystem):
    """x^2 - p = 0"""

    @property
    def num_unknowns(self):
        return 1

    def as_parameter(self, params):
        return np.asarray(params, dtype=complex).reshape(1)

    def residual(self, x, params):
        return x ** 2 - self.as_parameter(params)

    def jacobian(self, x, params):
        return np.array([[2.0 * x[0]]])

    def fingerprint(self, x):
        return x


class Reciprocal(SquareRoot):
    """p x - 1 = 0, whose solution escapes to infinity as p -> 0"""

    def residual(self, x, params):
        return self.as_parameter(params) * x - 1.0

    def jacobian(self, x, params):
        return np.array([[self.as_parameter(params)[0]]])


class TestHomotopyArc:
    """Test the gamma-trick parameter path"""

    def test_endpoints(self):
        """Test that t = 1 and t = 0 give the two endpoints"""
        arc = HomotopyArc(np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.exp(0.7j))

        assert np.allclose(arc.value(1.0), [1.0, 2.0])
        assert np.allclose(arc.value(0.0), [3.0, 4.0])

    def test_derivative(self):
        """Test the analytic derivative against central differences"""
        arc = HomotopyArc(np.array([1.0 + 1j]), np.array([-2.0]), np.exp(2.1j))
        t, h = 0.37, 1e-6

        numeric = (arc.value(t + h) - arc.value(t - h)) / (2.0 * h)
        assert np.allclose(arc.derivative(t), numeric, atol=1e-8)

    def test_gamma_one_is_straight_line(self):
        """Test that gamma = 1 interpolates linearly"""
        arc = HomotopyArc(np.array([0.0]), np.array([10.0]))

        assert np.allclose(arc.value(0.25), [7.5])

    def test_validation(self):
        """Test that bad gamma or shapes raise"""
        with pytest.raises(ValueError):
            HomotopyArc(np.zeros(2), np.zeros(2), 2.0)
        with pytest.raises(ValueError):
            HomotopyArc(np.zeros(2), np.zeros(3))


class TestTrackerOptions:
    """Test option validation"""

    def test_defaults(self):
        """Test the default step policy"""
        options = TrackerOptions()

        assert options.initial_step == 0.05
        assert options.min_step == 1e-7
        assert options.max_failure_fraction == 0.1

    def test_invalid(self):
        """Test inconsistent settings"""
        with pytest.raises(ValueError):
            TrackerOptions(min_step=0.1, initial_step=0.05)
        with pytest.raises(ValueError):
            TrackerOptions(corrector_tolerance=0.0)
        with pytest.raises(ValueError):
            TrackerOptions(shrink_factor=1.5)


class TestNewton:
    """Test Newton refinement"""

    def test_converges(self):
        """Test quadratic convergence to sqrt(2)"""
        x, residual, converged = newton_refine(SquareRoot(), np.array([1.0]), 2.0)

        assert converged
        assert residual < 1e-11
        assert abs(x[0] - np.sqrt(2.0)) < 1e-12

    def test_singular_start(self):
        """Test that a singular Jacobian stops without converging"""
        x, _, converged = newton_refine(SquareRoot(), np.array([0.0]), 2.0)

        assert not converged
        assert x[0] == 0.0


class TestTrackPath:
    """Test single-path tracking"""

    def test_square_root(self):
        """Test tracking a root of x^2 - p from p = 1 to p = 4"""
        arc = HomotopyArc(np.array([1.0]), np.array([4.0]), np.exp(1.3j))
        result = track_path(SquareRoot(), arc, np.array([1.0]))

        assert result.status == PathStatus.SUCCESS
        assert result.success
        assert abs(result.endpoint[0] ** 2 - 4.0) < 1e-10
        assert result.steps > 0

    def test_divergent_path_fails(self):
        """Test that a solution escaping to infinity is not reported as success"""
        arc = HomotopyArc(np.array([1.0]), np.array([0.0]), np.exp(0.4j))
        result = track_path(Reciprocal(), arc, np.array([1.0]))

        assert not result.success
        assert result.status in (PathStatus.DIVERGED, PathStatus.MIN_STEP_REACHED, PathStatus.MAX_STEPS)


class TestTransport:
    """Test batch transport of kernel-system solutions"""

    def setup_method(self):
        self.system = build_system(RankModel(3, 3, 2), patched=True, rng_seed=6)
        self.x0, self.U0 = seed_solution(self.system, 4)
        self.U1 = self.system.random_parameter(np.random.default_rng(12))

    def test_forward_and_back(self):
        """Test that reversing the arc with conj(gamma) recovers the start point"""
        gamma = np.exp(0.9j)
        forward = transport_solutions(self.system, self.U0, [self.x0], self.U1, rng_seed=1, threads=1, gamma=gamma)

        assert forward[0].success
        assert self.system.residual_norm(forward[0].endpoint, self.U1) < 1e-10

        back = transport_solutions(self.system, self.U1, [forward[0].endpoint], self.U0, rng_seed=1, threads=1,
                                   gamma=np.conj(gamma))
        assert back[0].success
        assert np.allclose(self.system.fingerprint(back[0].endpoint), self.system.fingerprint(self.x0), atol=1e-6)

    def test_threads_do_not_change_results(self):
        """Test that parallel and serial transport agree"""
        starts = [self.x0, self.x0]
        serial = transport_solutions(self.system, self.U0, starts, self.U1, rng_seed=3, threads=1)
        parallel = transport_solutions(self.system, self.U0, starts, self.U1, rng_seed=3, threads=2)

        for a, b in zip(serial, parallel):
            assert np.allclose(a.endpoint, b.endpoint, atol=1e-12)

    def test_too_many_failures_raise(self):
        """Test that PathFailure carries the per-path results"""
        options = TrackerOptions(retries=0, max_steps=2000)

        with pytest.raises(PathFailure) as excinfo:
            transport_solutions(Reciprocal(), 1.0, [np.array([1.0])], 0.0, rng_seed=0, options=options, threads=1)
        assert len(excinfo.value.results) == 1
        assert not excinfo.value.results[0].success

    def test_retry_gamma_is_deterministic(self):
        """Test the per-path retry stream"""
        assert retry_gamma(1, 2, 3) == retry_gamma(1, 2, 3)
        assert retry_gamma(1, 2, 3) != retry_gamma(1, 2, 4)
        assert abs(abs(retry_gamma(5, 0, 1)) - 1.0) < 1e-14


if __name__ == "__main__":
    pytest.main([__file__])
