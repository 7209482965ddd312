# recommenders/ecf_omd.py
"""
ECF-OMD: the margin-distribution recommender with the negative half of the
distribution fixed to uniform, so negatives collapse to their centroid.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from core.dataset import InteractionMatrix
from core.exceptions import DegenerateUserError
from core.gram import ItemVectors
from core.solver import UserSolution, solve_simplex_qp
from recommenders.base import BaseRecommender

logger = logging.getLogger(__name__)


class NegativeCentroidCache:
    """
    Sum of every normalized item vector, kept once per training matrix.

    The centroid of a user's negatives is (total - sum of the user's
    positives) / m_u-, which costs O(|I_u|) columns instead of O(m).
    """

    def __init__(self, vectors: ItemVectors):
        self.vectors = vectors
        self.total = vectors.centroid_total()
        self.norms = vectors.norms

    def recompute(self) -> np.ndarray:
        return self.vectors.centroid_total()

    def negative_centroid(self, positives: np.ndarray) -> np.ndarray:
        m_neg = self.vectors.m - len(positives)
        if m_neg <= 0:
            raise DegenerateUserError("user rated every item; the negative set is empty")
        if len(positives) == 0:
            return self.total / float(m_neg)
        pos_sum = np.asarray(self.vectors.X[:, positives].sum(axis=1)).ravel()
        return (self.total - pos_sum) / float(m_neg)


class ECFOMDRecommender(BaseRecommender):

    def __init__(self, lambda_p: float = 0.01, tol: float = 1e-6, max_iter: int = 1000,
                 step_scale: float = 1.0, check_monotone: bool = False):
        self.lambda_p = lambda_p
        self.tol = tol
        self.max_iter = max_iter
        self.step_scale = step_scale
        self.check_monotone = check_monotone
        self.vectors: Optional[ItemVectors] = None
        self.cache: Optional[NegativeCentroidCache] = None
        super().__init__()

    def get_method_name(self) -> str:
        return "ecf-omd"

    def get_description(self) -> str:
        return "Margin distribution optimization against the negative centroid (linear kernel)"

    def _fit(self, train: InteractionMatrix) -> None:
        self.vectors = ItemVectors(train)
        self.cache = NegativeCentroidCache(self.vectors)

    def train_user(self, user: int) -> Tuple[UserSolution, np.ndarray, np.ndarray]:
        """Solution, positives and the negative centroid for ``user``"""
        pos = self.positives(user)
        Xp = self.vectors.X[:, pos]
        mu = self.cache.negative_centroid(pos)
        K_plus = (Xp.T @ Xp).toarray()
        q_vec = np.asarray(Xp.T @ mu).ravel()
        sol = solve_simplex_qp(K_plus, q_vec, self.lambda_p, tol=self.tol, max_iter=self.max_iter,
                               step_scale=self.step_scale, track_objective=self.check_monotone)
        if self.check_monotone and np.any(np.diff(sol.objective_history) > 1e-12):
            raise AssertionError(f"objective increased while solving user {user}")
        return sol, pos, mu

    def score_user(self, user: int):
        sol, pos, mu = self.train_user(user)
        w = np.asarray(self.vectors.X[:, pos] @ sol.alpha).ravel() - mu
        scores = np.asarray(self.vectors.X.T @ w).ravel()
        return scores, sol
