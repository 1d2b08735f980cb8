"""
Polynomial systems for mlrank

Provides the parametric system interface, the kernel formulation of the
likelihood equations and the sliced system used for trace tests.
"""

from .base_system import ParametricSystem
from .kernel_system import (
    KernelSystem,
    build_system,
    evaluate,
    jacobian,
    lift_to_matrix,
    residual_norm,
    seed_solution,
    try_refit,
)
from .pencil_system import SlicedSystem

__all__ = [
    "ParametricSystem",
    "KernelSystem",
    "SlicedSystem",
    "build_system",
    "evaluate",
    "jacobian",
    "lift_to_matrix",
    "residual_norm",
    "seed_solution",
    "try_refit",
]
