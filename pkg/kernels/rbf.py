# kernels/rbf.py
import math

import numpy as np
from scipy.special import gammaln

from kernels.base import BaseKernel, ArrayLike


class RBFKernel(BaseKernel):
    """
    k(x, y) = exp(-gamma ||x - y||^2).

    On unit vectors ||x - y||^2 = 2 - 2 x.y, so the kernel is
    exp(-2 gamma) exp(2 gamma x.y) and a_s = exp(-2 gamma) (2 gamma)^s / s!.
    """

    def get_family_name(self) -> str:
        return "rbf"

    def get_description(self) -> str:
        return f"exp(-{self.spec.gamma:g} ||x-y||^2)"

    def evaluate(self, dot: ArrayLike, norm_i: ArrayLike = 1.0, norm_j: ArrayLike = 1.0) -> ArrayLike:
        t = np.asarray(dot, dtype=np.float64)
        sq_dist = np.square(norm_i) + np.square(norm_j) - 2.0 * t
        return np.exp(-self.spec.gamma * np.maximum(sq_dist, 0.0))

    def evaluate_reduced(self, dot: ArrayLike) -> ArrayLike:
        g2 = 2.0 * self.spec.gamma
        return math.exp(-g2) * np.expm1(g2 * np.asarray(dot, dtype=np.float64))

    def coefficient(self, s: int) -> float:
        g2 = 2.0 * self.spec.gamma
        return float(np.exp(-g2 + s * math.log(g2) - gammaln(s + 1)))
