# kernels/polynomial.py
import numpy as np
from scipy.special import binom

from kernels.base import BaseKernel, ArrayLike


class PolynomialKernel(BaseKernel):
    """k(x, y) = (x . y + c)^d with c >= 0 and integer d >= 1"""

    def get_family_name(self) -> str:
        return "polynomial"

    def get_description(self) -> str:
        return f"(x.y + {self.spec.c:g})^{self.spec.degree}"

    def evaluate(self, dot: ArrayLike, norm_i: ArrayLike = 1.0, norm_j: ArrayLike = 1.0) -> ArrayLike:
        return np.power(np.asarray(dot, dtype=np.float64) + self.spec.c, self.spec.degree)

    def evaluate_reduced(self, dot: ArrayLike) -> ArrayLike:
        # sum_{s>=1} a_s t^s, exact zero at t = 0
        t = np.asarray(dot, dtype=np.float64)
        total = np.zeros_like(t)
        for s in range(self.spec.degree, 0, -1):
            total = (total + self.coefficient(s)) * t
        return total

    def coefficient(self, s: int) -> float:
        d, c = self.spec.degree, self.spec.c
        if s > d:
            return 0.0
        return float(binom(d, s) * c ** (d - s))
