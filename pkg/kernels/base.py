# kernels/base.py
from abc import ABC, abstractmethod
from typing import Dict, List, Union
import logging

import numpy as np

from models.schemas import KernelSpec

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class BaseKernel(ABC):
    """
    Base class for dot-product kernels k(x, y) = f(x . y).

    Every family has a Maclaurin expansion f(t) = sum_s a_s t^s with
    non-negative coefficients. Evaluation works on raw dot products plus
    the two norms; on normalized item vectors both norms are 1.
    """

    def __init__(self, spec: KernelSpec):
        if spec.family.value != self.get_family_name():
            raise ValueError(f"{type(self).__name__} cannot evaluate a {spec.family.value} spec")
        self.spec = spec

    @abstractmethod
    def get_family_name(self) -> str:
        """Return the family identifier"""
        pass

    @abstractmethod
    def get_description(self) -> str:
        """Return a formula-style description of f"""
        pass

    @abstractmethod
    def evaluate(self, dot: ArrayLike, norm_i: ArrayLike = 1.0, norm_j: ArrayLike = 1.0) -> ArrayLike:
        """Full (non-reduced) kernel value"""
        pass

    @abstractmethod
    def coefficient(self, s: int) -> float:
        """Maclaurin coefficient a_s"""
        pass

    def zero_degree_term(self) -> float:
        return self.coefficient(0)

    def maclaurin_coefficients(self, order: int) -> List[float]:
        if order < 0:
            raise ValueError(f"order must be >= 0, got {order}")
        return [self.coefficient(s) for s in range(order + 1)]

    def evaluate_reduced(self, dot: ArrayLike) -> ArrayLike:
        """f(t) - a_0 on unit-norm vectors; subclasses override when cancellation matters"""
        return self.evaluate(dot) - self.zero_degree_term()

    def __call__(self, dot: ArrayLike, norm_i: ArrayLike = 1.0, norm_j: ArrayLike = 1.0) -> ArrayLike:
        if self.spec.reduced:
            if np.all(np.asarray(norm_i) == 1.0) and np.all(np.asarray(norm_j) == 1.0):
                return self.evaluate_reduced(dot)
            return self.evaluate(dot, norm_i, norm_j) - self.zero_degree_term()
        return self.evaluate(dot, norm_i, norm_j)

    def get_info(self) -> Dict[str, str]:
        return {
            'name': self.get_family_name(),
            'description': self.get_description(),
            'label': self.spec.label(),
        }
