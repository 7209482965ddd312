# recommenders/base.py
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Any, Optional, Tuple
import logging

import numpy as np

from core.dataset import InteractionMatrix
from core.exceptions import DegenerateUserError
from core.solver import UserSolution
from core.utils import Stopwatch, TimingLog

logger = logging.getLogger(__name__)


@dataclass
class Recommendation:
    """Ranking of every non-excluded item for one user"""
    user: int
    items: np.ndarray
    scores: np.ndarray
    excluded: np.ndarray
    solution: Optional[UserSolution] = None
    timings: Dict[str, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.items)


def rank_items(
    user: int,
    scores: np.ndarray,
    excluded: np.ndarray,
    unreachable: Optional[np.ndarray] = None,
    solution: Optional[UserSolution] = None,
) -> Recommendation:
    """
    Sort by descending score, ties by ascending item id.

    Items in ``unreachable`` get -inf and follow every scored item in id order.
    """
    scores = np.asarray(scores, dtype=np.float64).copy()
    m = scores.shape[0]
    keep = np.ones(m, dtype=bool)
    keep[np.asarray(excluded, dtype=np.int64)] = False
    if unreachable is not None and len(unreachable):
        scores[unreachable] = -np.inf
    candidates = np.flatnonzero(keep)
    # lexsort sorts by the last key first
    order = np.lexsort((candidates, -scores[candidates]))
    ranked = candidates[order]
    return Recommendation(
        user=user,
        items=ranked,
        scores=scores[ranked],
        excluded=np.asarray(excluded, dtype=np.int64),
        solution=solution,
    )


class BaseRecommender(ABC):
    """Base class for all per-user top-N recommenders"""

    def __init__(self):
        self.method_name = self.get_method_name()
        self.description = self.get_description()
        self.train: Optional[InteractionMatrix] = None
        self.timing: Optional[TimingLog] = None

    @abstractmethod
    def get_method_name(self) -> str:
        """Return the method identifier"""
        pass

    @abstractmethod
    def get_description(self) -> str:
        """Return description of this recommender"""
        pass

    @abstractmethod
    def _fit(self, train: InteractionMatrix) -> None:
        """Precompute shared read-only state from the training matrix"""
        pass

    @abstractmethod
    def score_user(self, user: int) -> Tuple[np.ndarray, Optional[UserSolution]]:
        """Catalog-length score vector for ``user`` and the solution behind it"""
        pass

    def fit(self, train: InteractionMatrix, timing: Optional[TimingLog] = None) -> "BaseRecommender":
        self.train = train
        self.timing = timing
        self._fit(train)
        logger.debug("%s fitted on %r", self.method_name, train)
        return self

    def recommend(self, user: int) -> Recommendation:
        if self.train is None:
            raise RuntimeError(f"{self.method_name} must be fitted before recommending")
        with Stopwatch() as solve_time:
            scores, solution = self.score_user(user)
        with Stopwatch() as rank_time:
            excluded = self.train.items_of(user)
            unreachable = np.flatnonzero(self.train.item_counts == 0)
            rec = rank_items(user, scores, excluded, unreachable, solution)
        rec.timings = {"solve": solve_time.elapsed(), "rank": rank_time.elapsed()}
        return rec

    def positives(self, user: int) -> np.ndarray:
        """Training positives, refusing users with an empty side"""
        pos = self.train.items_of(user)
        if len(pos) == 0:
            raise DegenerateUserError(f"user {user} has no training positives")
        if len(pos) == self.train.m:
            raise DegenerateUserError(f"user {user} rated every item; no negatives left")
        return pos

    def get_info(self) -> Dict[str, Any]:
        return {
            'name': self.method_name,
            'description': self.description,
        }
