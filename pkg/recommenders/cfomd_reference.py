# recommenders/cfomd_reference.py
"""
Dense CF-OMD oracle: the full margin-distribution problem with separate
simplices over positives and negatives. Only meant for small catalogs.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from core.dataset import InteractionMatrix
from core.exceptions import SizeCapError
from core.gram import ItemVectors
from core.solver import UserSolution, solve_simplex_qp
from recommenders.base import BaseRecommender

logger = logging.getLogger(__name__)


def cfomd_objective(K: np.ndarray, pos: np.ndarray, neg: np.ndarray, alpha: np.ndarray,
                    lambda_p: float, lambda_n: float) -> float:
    """alpha' Y K Y alpha + alpha' Lambda alpha"""
    y = np.zeros(K.shape[0])
    y[pos] = 1.0
    y[neg] = -1.0
    ya = y * alpha
    reg = lambda_p * np.sum(alpha[pos] ** 2) + lambda_n * np.sum(alpha[neg] ** 2)
    return float(ya @ K @ ya + reg)


class CFOMDReference(BaseRecommender):

    def __init__(self, lambda_p: float = 0.01, lambda_n: float = 1e8, cap: int = 500,
                 outer_iter: int = 200, tol: float = 1e-6, max_iter: int = 1000):
        self.lambda_p = lambda_p
        self.lambda_n = lambda_n
        self.cap = cap
        self.outer_iter = outer_iter
        self.tol = tol
        self.max_iter = max_iter
        self.vectors: Optional[ItemVectors] = None
        self.K: Optional[np.ndarray] = None
        super().__init__()

    def get_method_name(self) -> str:
        return "cfomd-ref"

    def get_description(self) -> str:
        return f"Dense CF-OMD reference (lambda_n={self.lambda_n:g}, m <= {self.cap})"

    def _fit(self, train: InteractionMatrix) -> None:
        if train.m > self.cap:
            raise SizeCapError(f"cfomd-ref is limited to {self.cap} items, catalog has {train.m}")
        self.vectors = ItemVectors(train)
        X = self.vectors.X
        self.K = (X.T @ X).toarray()

    def solve(self, user: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, UserSolution]:
        """Block-coordinate descent alternating the two simplices"""
        pos = self.positives(user)
        neg = np.setdiff1d(np.arange(self.train.m), pos)
        K = self.K
        Kpp, Knn, Kpn = K[np.ix_(pos, pos)], K[np.ix_(neg, neg)], K[np.ix_(pos, neg)]

        a_pos = np.full(len(pos), 1.0 / len(pos))
        a_neg = np.full(len(neg), 1.0 / len(neg))
        sol_pos = None
        total_iter = 0
        for outer in range(self.outer_iter):
            sol_pos = solve_simplex_qp(Kpp, Kpn @ a_neg, self.lambda_p, tol=self.tol,
                                       max_iter=self.max_iter, alpha0=a_pos)
            sol_neg = solve_simplex_qp(Knn, Kpn.T @ sol_pos.alpha, self.lambda_n, tol=self.tol,
                                       max_iter=self.max_iter, alpha0=a_neg)
            total_iter += sol_pos.iterations + sol_neg.iterations
            change = max(np.abs(sol_pos.alpha - a_pos).max(), np.abs(sol_neg.alpha - a_neg).max())
            a_pos, a_neg = sol_pos.alpha, sol_neg.alpha
            if change <= self.tol:
                break
        logger.debug("cfomd-ref user %d: %d outer rounds, %d inner iterations", user, outer + 1, total_iter)

        alpha = np.zeros(self.train.m)
        alpha[pos] = a_pos
        alpha[neg] = a_neg
        summary = UserSolution(alpha=alpha, iterations=total_iter, final_gap=float(change),
                               converged=change <= self.tol,
                               objective=cfomd_objective(K, pos, neg, alpha, self.lambda_p, self.lambda_n))
        return alpha, pos, neg, summary

    def score_user(self, user: int):
        alpha, pos, neg, summary = self.solve(user)
        X = self.vectors.X
        w = np.asarray(X[:, pos] @ alpha[pos] - X[:, neg] @ alpha[neg]).ravel()
        norm = np.linalg.norm(w)
        if norm > 0:
            w = w / norm
        return np.asarray(X.T @ w).ravel(), summary
