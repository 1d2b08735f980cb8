"""
Sliced system used by the trace test

Fix a data matrix U0 and a direction V. The solutions of F(x; U0 + sV) = 0
form a curve C in (x, s). For q = (a, b) the sliced system

    G(x; q) = F(x; U0 + (b - a * l(x)) V)

cuts C with the hyperplane s + a * l(x) = b, where l is a random linear
form. q = (0, 0) recovers the original fiber; moving b with a fixed
sweeps a pencil of parallel hyperplanes. G is affine in q.
"""

import numpy as np

from .base_system import ParametricSystem


class SlicedSystem(ParametricSystem):
    """Hyperplane sections of the curve of solutions over a line of data"""

    def __init__(self, base: ParametricSystem, U0, V, form: np.ndarray):
        self.base = base
        self.U0 = base.as_parameter(U0)
        self.V = base.as_parameter(V)
        self.form = np.asarray(form, dtype=complex)
        if self.form.shape != (base.num_unknowns,):
            raise ValueError(f"Linear form needs {base.num_unknowns} coefficients, got {self.form.shape}")
        self._zero = np.zeros_like(self.U0)

    @property
    def num_unknowns(self) -> int:
        return self.base.num_unknowns

    def as_parameter(self, params) -> np.ndarray:
        q = np.asarray(params, dtype=complex).reshape(-1)
        if q.shape != (2,):
            raise ValueError(f"Slice parameter must be a pair (a, b), got shape {q.shape}")
        return q

    def line_value(self, x: np.ndarray, params) -> complex:
        """The line coordinate s = b - a l(x) of a point on a slice"""
        a, b = self.as_parameter(params)
        return b - a * complex(self.form @ x)

    def direction_residual(self, x: np.ndarray) -> np.ndarray:
        """dF/ds along the data line, independent of s"""
        return self.base.residual(x, self.V) - self.base.residual(x, self._zero)

    def residual(self, x: np.ndarray, params) -> np.ndarray:
        s = self.line_value(x, params)
        return self.base.residual(x, self.U0 + s * self.V)

    def jacobian(self, x: np.ndarray, params) -> np.ndarray:
        a, _ = self.as_parameter(params)
        s = self.line_value(x, params)
        J = self.base.jacobian(x, self.U0 + s * self.V)
        if a != 0:
            J = J - a * np.outer(self.direction_residual(x), self.form)
        return J

    def fingerprint(self, x: np.ndarray) -> np.ndarray:
        return self.base.fingerprint(x)

    def residual_norm(self, x: np.ndarray, params) -> float:
        s = self.line_value(x, params)
        return self.base.residual_norm(x, self.U0 + s * self.V)
