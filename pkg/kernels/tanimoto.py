# kernels/tanimoto.py
import numpy as np

from kernels.base import BaseKernel, ArrayLike


class TanimotoKernel(BaseKernel):
    """k(x, y) = x.y / (||x||^2 + ||y||^2 - x.y); t / (2 - t) on unit vectors"""

    def get_family_name(self) -> str:
        return "tanimoto"

    def get_description(self) -> str:
        return "x.y / (||x||^2 + ||y||^2 - x.y)"

    def evaluate(self, dot: ArrayLike, norm_i: ArrayLike = 1.0, norm_j: ArrayLike = 1.0) -> ArrayLike:
        t = np.asarray(dot, dtype=np.float64)
        denom = np.square(norm_i) + np.square(norm_j) - t
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(denom > 0, t / np.where(denom > 0, denom, 1.0), 0.0)

    def coefficient(self, s: int) -> float:
        return 0.0 if s == 0 else 2.0 ** (-s)
