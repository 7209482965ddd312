# core/kernel_engine.py
import logging
from typing import Dict, List, Type

from core.exceptions import ConfigurationError
from kernels import BaseKernel, LinearKernel, PolynomialKernel, RBFKernel, TanimotoKernel
from kernels.base import ArrayLike
from models.schemas import KernelFamily, KernelSpec

logger = logging.getLogger(__name__)


class KernelEngine:
    """Registry of dot-product kernel families"""

    def __init__(self):
        self.kernels: Dict[str, Type[BaseKernel]] = {}
        self._initialize_kernels()

    def _initialize_kernels(self):
        self.kernels = {
            KernelFamily.LINEAR.value: LinearKernel,
            KernelFamily.POLYNOMIAL.value: PolynomialKernel,
            KernelFamily.RBF.value: RBFKernel,
            KernelFamily.TANIMOTO.value: TanimotoKernel,
        }
        logger.debug("kernel engine initialized with %d families", len(self.kernels))

    def create(self, spec: KernelSpec) -> BaseKernel:
        try:
            kernel_class = self.kernels[spec.family.value]
        except KeyError:
            raise ConfigurationError(f"unknown kernel family: {spec.family.value}")
        return kernel_class(spec)

    def get_available_families(self) -> Dict[str, str]:
        return {name: cls.__doc__.strip().splitlines()[0] if cls.__doc__ else name
                for name, cls in self.kernels.items()}


_engine = KernelEngine()


def get_kernel(spec: KernelSpec) -> BaseKernel:
    return _engine.create(spec)


def kernel_eval(spec: KernelSpec, dot: ArrayLike, norm_i: ArrayLike = 1.0, norm_j: ArrayLike = 1.0) -> ArrayLike:
    """f(dot) for the kernel family, minus k0 for reduced kernels"""
    return get_kernel(spec)(dot, norm_i, norm_j)


def maclaurin_coefficients(spec: KernelSpec, order: int) -> List[float]:
    """a_0 .. a_order"""
    if order < 0:
        raise ConfigurationError(f"order must be >= 0, got {order}")
    return get_kernel(spec).maclaurin_coefficients(order)


def zero_degree_term(spec: KernelSpec) -> float:
    return get_kernel(spec).zero_degree_term()


def reduce(spec: KernelSpec) -> KernelSpec:
    """The RDP version of ``spec``: reduced=True with k0 recorded"""
    return spec.model_copy(update={"reduced": True, "k0": zero_degree_term(spec)})


def make_spec(
    family: str = "linear",
    c: float = 1.0,
    degree: int = 2,
    gamma: float = 1.0,
    reduced: bool = True,
) -> KernelSpec:
    """Validated spec whose k0 is always filled in"""
    try:
        family_enum = KernelFamily(family)
    except ValueError:
        raise ConfigurationError(f"unknown kernel family: {family}")
    spec = KernelSpec(family=family_enum, c=c, degree=degree, gamma=gamma, reduced=reduced)
    return spec.model_copy(update={"k0": zero_degree_term(spec)})


__all__ = [
    'KernelEngine', 'get_kernel', 'kernel_eval', 'maclaurin_coefficients',
    'zero_degree_term', 'reduce', 'make_spec',
]
