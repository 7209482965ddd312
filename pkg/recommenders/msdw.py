# recommenders/msdw.py
"""Item-based neighbourhood scoring with the asymmetric cosine similarity"""

import logging
from typing import Optional

import numpy as np
import scipy.sparse as sp

from core.dataset import InteractionMatrix
from recommenders.base import BaseRecommender

logger = logging.getLogger(__name__)


def asymmetric_cosine(co_counts: np.ndarray, count_i: np.ndarray, count_j: np.ndarray, alpha: float) -> np.ndarray:
    """|U_i n U_j| / (|U_i|^alpha |U_j|^(1 - alpha))"""
    denom = np.power(count_i, alpha) * np.power(count_j, 1.0 - alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, co_counts / np.where(denom > 0, denom, 1.0), 0.0)


class MSDWRecommender(BaseRecommender):

    def __init__(self, alpha: float = 0.5, locality_q: float = 1.0):
        self.alpha = alpha
        self.locality_q = locality_q
        self.co_counts: Optional[sp.csc_matrix] = None
        self.counts: Optional[np.ndarray] = None
        super().__init__()

    def get_method_name(self) -> str:
        return "msdw"

    def get_description(self) -> str:
        return f"Asymmetric cosine neighbourhood (alpha={self.alpha:g}, q={self.locality_q:g})"

    def _fit(self, train: InteractionMatrix) -> None:
        R = train.by_user
        self.co_counts = sp.csc_matrix(R.T @ R)
        self.counts = train.item_counts.astype(np.float64)

    def similarity(self, i: int, j: int) -> float:
        c = float(self.co_counts[i, j])
        return float(asymmetric_cosine(np.array([c]), self.counts[[i]], self.counts[[j]], self.alpha)[0])

    def score_user(self, user: int):
        pos = self.positives(user)
        sub = self.co_counts[:, pos].tocoo()
        w = asymmetric_cosine(sub.data, self.counts[sub.row], self.counts[pos[sub.col]], self.alpha)
        if self.locality_q != 1.0:
            w = np.power(w, self.locality_q)
        scores = np.bincount(sub.row, weights=w, minlength=self.train.m).astype(np.float64)
        return scores, None
