# recommenders/cf_komd.py
"""
CF-KOMD: the margin-distribution recommender with any dot-product kernel
in place of the linear gram.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from core.dataset import InteractionMatrix
from core.gram import GramMatrix, ItemVectors, QTilde, compute_q_exact, gram_and_q_tilde
from core.solver import UserSolution, solve_simplex_qp
from core.utils import GramCache
from models.schemas import KernelSpec, QSource
from recommenders.base import BaseRecommender

logger = logging.getLogger(__name__)


class CFKOMDRecommender(BaseRecommender):

    def __init__(
        self,
        spec: KernelSpec,
        lambda_p: float = 0.01,
        q_source: QSource = QSource.TILDE,
        tol: float = 1e-6,
        max_iter: int = 1000,
        step_scale: float = 1.0,
        threads: int = 1,
        dense_cap: int = 2000,
        cache: Optional[GramCache] = None,
    ):
        self.spec = spec
        self.lambda_p = lambda_p
        self.q_source = QSource(q_source)
        self.tol = tol
        self.max_iter = max_iter
        self.step_scale = step_scale
        self.threads = threads
        self.dense_cap = dense_cap
        self.cache = cache
        self.vectors: Optional[ItemVectors] = None
        self.gram: Optional[GramMatrix] = None
        self.q_tilde: Optional[QTilde] = None
        super().__init__()

    def get_method_name(self) -> str:
        return "cf-komd"

    def get_description(self) -> str:
        return f"Kernelized margin distribution optimization with {self.spec.label()}"

    def _fit(self, train: InteractionMatrix) -> None:
        self.vectors, self.gram, self.q_tilde = gram_and_q_tilde(
            train, self.spec, threads=self.threads, dense_cap=self.dense_cap, cache=self.cache,
            timing=self.timing)

    def q_values(self, positives: np.ndarray) -> np.ndarray:
        """Catalog-length q for the user owning ``positives``"""
        if self.q_source == QSource.EXACT:
            return compute_q_exact(self.vectors, self.spec, self.gram, positives)
        return self.q_tilde.values

    def train_user(self, user: int) -> Tuple[UserSolution, np.ndarray, np.ndarray]:
        pos = self.positives(user)
        q = self.q_values(pos)
        K_plus = self.gram.submatrix(pos)
        sol = solve_simplex_qp(K_plus, q[pos], self.lambda_p, tol=self.tol,
                               max_iter=self.max_iter, step_scale=self.step_scale)
        return sol, pos, q

    def score_user(self, user: int):
        sol, pos, q = self.train_user(user)
        scores = self.gram.columns_dot(pos, sol.alpha) - q
        return scores, sol
