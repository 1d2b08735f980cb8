"""
Path tracking for mlrank

Predictor-corrector continuation of solutions of a ParametricSystem as its
parameters move along a gamma-trick arc. The predictor is a fourth-order
Runge-Kutta step on the Davidenko equation J dx/dt = -dF/dt and the
corrector is Newton's method at the new parameter value.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import default_threads
from .exceptions import PathFailure, SingularMatrix
from .formulation.base_system import ParametricSystem
from .models import PathResult, PathStatus
from .utils.linalg_utils import random_unit_complex, solve_linear

logger = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e10
START_TOLERANCE = 1e-9


@dataclass
class TrackerOptions:
    """Step-size policy and tolerances for track_path"""
    initial_step: float = 0.05
    min_step: float = 1e-7
    max_step: float = 0.1
    max_newton_iterations: int = 3
    corrector_tolerance: float = 1e-9
    growth_after: int = 4
    growth_factor: float = 2.0
    shrink_factor: float = 0.5
    endpoint_tolerance: float = 1e-11
    max_steps: int = 50000
    # near t = 0 the step is capped
    endgame_start: float = 0.01
    endgame_step: float = 1e-3
    endpoint_newton_iterations: int = 10
    retries: int = 3
    max_failure_fraction: float = 0.1

    def __post_init__(self):
        positive = {
            "initial_step": self.initial_step,
            "min_step": self.min_step,
            "max_step": self.max_step,
            "corrector_tolerance": self.corrector_tolerance,
            "endpoint_tolerance": self.endpoint_tolerance,
            "endgame_step": self.endgame_step,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.min_step >= self.initial_step:
            raise ValueError("min_step must be smaller than initial_step")
        if self.max_newton_iterations < 1 or self.max_steps < 1:
            raise ValueError("Iteration limits must be at least 1")
        if not 0 < self.shrink_factor < 1 < self.growth_factor:
            raise ValueError("Need shrink_factor < 1 < growth_factor")


class HomotopyArc:
    """
    Parameter path p(t) = (gamma t p_start + (1 - t) p_end) / (1 + (gamma - 1) t)

    t runs from 1 (p_start) to 0 (p_end). gamma = 1 gives the straight line.
    """

    def __init__(self, p_start: np.ndarray, p_end: np.ndarray, gamma: complex = 1.0):
        self.p_start = np.asarray(p_start, dtype=complex)
        self.p_end = np.asarray(p_end, dtype=complex)
        if self.p_start.shape != self.p_end.shape:
            raise ValueError(f"Arc endpoints differ in shape: {self.p_start.shape} vs {self.p_end.shape}")
        if abs(abs(gamma) - 1.0) > 1e-12:
            raise ValueError(f"gamma must have modulus 1, got {abs(gamma)}")
        self.gamma = complex(gamma)

    def _denominator(self, t: float) -> complex:
        return 1.0 + (self.gamma - 1.0) * t

    def value(self, t: float) -> np.ndarray:
        if t == 1.0:
            return self.p_start.copy()
        if t == 0.0:
            return self.p_end.copy()
        return (self.gamma * t * self.p_start + (1.0 - t) * self.p_end) / self._denominator(t)

    def derivative(self, t: float) -> np.ndarray:
        return self.gamma * (self.p_start - self.p_end) / self._denominator(t) ** 2


def newton_refine(system: ParametricSystem, x: np.ndarray, params, max_iterations: int = 10,
                  tolerance: float = 1e-11) -> Tuple[np.ndarray, float, bool]:
    """
    Newton iterations at fixed parameters

    Args:
        system: system to solve
        x: starting point
        params: fixed parameter value
        max_iterations: iteration cap
        tolerance: stop once the scaled residual drops below this

    Returns:
        Tuple of (x, scaled residual, converged)
    """
    x = np.array(x, dtype=complex)
    residual = system.residual_norm(x, params)
    for _ in range(max_iterations):
        if residual < tolerance:
            return x, residual, True
        try:
            dx = solve_linear(system.jacobian(x, params), -system.residual(x, params))
        except SingularMatrix:
            return x, residual, False
        x = x + dx
        residual = system.residual_norm(x, params)
    return x, residual, residual < tolerance


def _velocity(system: ParametricSystem, arc: HomotopyArc, x: np.ndarray, t: float) -> np.ndarray:
    params = arc.value(t)
    rhs = -system.parameter_derivative(x, arc.derivative(t))
    return solve_linear(system.jacobian(x, params), rhs)


def _predict(system: ParametricSystem, arc: HomotopyArc, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = _velocity(system, arc, x, t)
    k2 = _velocity(system, arc, x + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = _velocity(system, arc, x + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = _velocity(system, arc, x + dt * k3, t + dt)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _correct(system: ParametricSystem, x: np.ndarray, params, options: TrackerOptions) -> Optional[np.ndarray]:
    scale = 1.0 + float(np.max(np.abs(x)))
    for iteration in range(options.max_newton_iterations):
        dx = solve_linear(system.jacobian(x, params), -system.residual(x, params))
        step = float(np.max(np.abs(dx)))
        # a large first correction means the predictor left the path's basin
        if iteration == 0 and step > 0.1 * scale:
            return None
        x = x + dx
        if step < options.corrector_tolerance * scale:
            return x
    return None


def track_path(system: ParametricSystem, arc: HomotopyArc, x_start: np.ndarray,
               options: Optional[TrackerOptions] = None) -> PathResult:
    """
    Follow one solution from t = 1 to t = 0

    Args:
        system: parametric system
        arc: parameter path
        x_start: solution at arc.value(1)
        options: tracker settings

    Returns:
        PathResult; Success means the endpoint residual is below the
        endpoint tolerance
    """
    options = options or TrackerOptions()
    x = np.array(x_start, dtype=complex)

    start_residual = system.residual_norm(x, arc.p_start)
    if start_residual > START_TOLERANCE:
        logger.warning("Start point residual %.2e exceeds %.0e; refining", start_residual, START_TOLERANCE)
        x, start_residual, _ = newton_refine(system, x, arc.p_start)

    t = 1.0
    h = options.initial_step
    successes = 0
    steps = 0
    while t > 0.0:
        if steps >= options.max_steps:
            return PathResult(PathStatus.MAX_STEPS, x, steps, system.residual_norm(x, arc.value(t)), gamma=arc.gamma)
        if np.max(np.abs(x)) > DIVERGENCE_NORM:
            return PathResult(PathStatus.DIVERGED, x, steps, float("inf"), gamma=arc.gamma)
        if h < options.min_step:
            logger.debug("Step size fell below %.1e at t = %.3e", options.min_step, t)
            return PathResult(PathStatus.MIN_STEP_REACHED, x, steps,
                              system.residual_norm(x, arc.value(t)), gamma=arc.gamma)

        h = min(h, options.max_step, t)
        if t < options.endgame_start:
            h = min(h, options.endgame_step, t)
        t_new = 0.0 if t - h <= 0.0 else t - h
        steps += 1

        try:
            predicted = _predict(system, arc, x, t, t_new - t)
            corrected = _correct(system, predicted, arc.value(t_new), options)
        except SingularMatrix:
            corrected = None

        if corrected is None or not np.all(np.isfinite(corrected)):
            h *= options.shrink_factor
            successes = 0
            continue

        x = corrected
        t = t_new
        successes += 1
        if successes >= options.growth_after:
            h *= options.growth_factor
            successes = 0

    x, residual, converged = newton_refine(system, x, arc.p_end, options.endpoint_newton_iterations,
                                           options.endpoint_tolerance)
    if np.max(np.abs(x)) > DIVERGENCE_NORM:
        return PathResult(PathStatus.DIVERGED, x, steps, residual, gamma=arc.gamma)
    if not converged:
        # singular or ill-conditioned endpoint
        return PathResult(PathStatus.MIN_STEP_REACHED, x, steps, residual, gamma=arc.gamma)
    return PathResult(PathStatus.SUCCESS, x, steps, residual, gamma=arc.gamma)


def retry_gamma(rng_seed: int, index: int, attempt: int) -> complex:
    """Deterministic per-path gamma for retry number `attempt`"""
    return random_unit_complex(np.random.default_rng([rng_seed, index, attempt]))


def transport_solutions(system: ParametricSystem, p_start, solutions: Sequence[np.ndarray], p_end,
                        rng_seed: int, options: Optional[TrackerOptions] = None,
                        threads: Optional[int] = None, gamma: Optional[complex] = None) -> List[PathResult]:
    """
    Track every solution from p_start to p_end along one shared arc

    Args:
        system: parametric system
        p_start: parameters the solutions satisfy
        solutions: start points
        p_end: target parameters
        rng_seed: seed for the shared gamma and the retry stream
        options: tracker settings
        threads: worker threads (defaults to the CPU count)
        gamma: explicit gamma; drawn from rng_seed when omitted

    Returns:
        PathResult list in input order

    Raises:
        PathFailure: if more than options.max_failure_fraction of the paths
            fail after retries
    """
    options = options or TrackerOptions()
    p_start = system.as_parameter(p_start)
    p_end = system.as_parameter(p_end)
    if gamma is None:
        gamma = random_unit_complex(np.random.default_rng(rng_seed))
    shared = HomotopyArc(p_start, p_end, gamma)

    def run(item: Tuple[int, np.ndarray]) -> PathResult:
        index, x_start = item
        result = track_path(system, shared, x_start, options)
        attempt = 1
        while not result.success and attempt <= options.retries:
            arc = HomotopyArc(p_start, p_end, retry_gamma(rng_seed, index, attempt))
            result = track_path(system, arc, x_start, options)
            attempt += 1
        result.attempts = attempt
        return result

    items = list(enumerate(solutions))
    workers = max(1, threads or default_threads())
    if workers == 1 or len(items) <= 1:
        results = [run(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, items))

    failed = sum(1 for result in results if not result.success)
    if failed:
        logger.info("%d of %d paths failed after retries", failed, len(results))
    if results and failed > options.max_failure_fraction * len(results):
        raise PathFailure(f"{failed} of {len(results)} paths failed", results)
    return results
