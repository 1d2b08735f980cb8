"""
Base system interface for mlrank

Defines the contract every parametrized square polynomial system must
implement so the tracker and monodromy code can move it between parameter
values.
"""

from abc import ABC, abstractmethod

import numpy as np


class ParametricSystem(ABC):
    """Square system F(x; p) = 0, affine in the parameters p"""

    @property
    @abstractmethod
    def num_unknowns(self) -> int:
        """Number of unknowns (equal to the number of equations)"""
        pass

    @abstractmethod
    def as_parameter(self, params) -> np.ndarray:
        """
        Normalize a parameter value into the array form used internally

        Args:
            params: parameter value in any accepted representation

        Returns:
            Complex array
        """
        pass

    @abstractmethod
    def residual(self, x: np.ndarray, params) -> np.ndarray:
        """
        Evaluate the system

        Args:
            x: unknown vector
            params: parameter value

        Returns:
            Complex residual vector F(x; params)
        """
        pass

    @abstractmethod
    def jacobian(self, x: np.ndarray, params) -> np.ndarray:
        """
        Derivative with respect to the unknowns

        Args:
            x: unknown vector
            params: parameter value

        Returns:
            Square complex matrix dF/dx
        """
        pass

    @abstractmethod
    def fingerprint(self, x: np.ndarray) -> np.ndarray:
        """
        Chart-independent coordinates used to tell solutions apart

        Args:
            x: unknown vector

        Returns:
            Complex vector
        """
        pass

    def parameter_derivative(self, x: np.ndarray, dparams) -> np.ndarray:
        """Directional derivative of F in the parameters (exact for affine dependence)"""
        dparams = self.as_parameter(dparams)
        return self.residual(x, dparams) - self.residual(x, np.zeros_like(dparams))

    def residual_norm(self, x: np.ndarray, params) -> float:
        """||F(x; p)||_inf scaled by max(1, ||p||_inf)"""
        params = self.as_parameter(params)
        scale = max(1.0, float(np.max(np.abs(params))))
        return float(np.max(np.abs(self.residual(x, params)))) / scale
