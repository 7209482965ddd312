# kernels/__init__.py
from kernels.base import BaseKernel
from kernels.linear import LinearKernel
from kernels.polynomial import PolynomialKernel
from kernels.rbf import RBFKernel
from kernels.tanimoto import TanimotoKernel

__all__ = ['BaseKernel', 'LinearKernel', 'PolynomialKernel', 'RBFKernel', 'TanimotoKernel']
