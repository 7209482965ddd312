# kernels/linear.py
from kernels.base import BaseKernel, ArrayLike


class LinearKernel(BaseKernel):
    """k(x, y) = x . y"""

    def get_family_name(self) -> str:
        return "linear"

    def get_description(self) -> str:
        return "x.y"

    def evaluate(self, dot: ArrayLike, norm_i: ArrayLike = 1.0, norm_j: ArrayLike = 1.0) -> ArrayLike:
        return dot * 1.0

    def evaluate_reduced(self, dot: ArrayLike) -> ArrayLike:
        return dot * 1.0

    def coefficient(self, s: int) -> float:
        return 1.0 if s == 1 else 0.0
