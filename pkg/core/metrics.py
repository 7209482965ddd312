# core/metrics.py
"""
Ranking quality metrics. A user's candidates are every item except the
training positives; held-out items are the positive class.
"""

import logging
import warnings
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from core.exceptions import ConfigurationError, TruncatedRankingWarning
from models.schemas import ExperimentReport, MetricsReport, UserMetricsRow
from recommenders.base import Recommendation

logger = logging.getLogger(__name__)

Ranking = Union[Recommendation, Sequence[int], np.ndarray]


def _ranked_items(ranking: Ranking) -> np.ndarray:
    if isinstance(ranking, Recommendation):
        return ranking.items
    return np.asarray(ranking, dtype=np.int64)


def _cutoff(length: int, k: int, name: str) -> int:
    if k < 1:
        raise ConfigurationError(f"{name} cutoff must be >= 1, got {k}")
    if k > length:
        warnings.warn(f"{name} cutoff {k} exceeds ranking length {length}; using {length}",
                      TruncatedRankingWarning, stacklevel=3)
        return length
    return k


def auc_user(
    positives: Iterable[int],
    ranking: Recommendation,
    candidates: Optional[Iterable[int]] = None,
) -> Optional[float]:
    """
    Fraction of (positive, negative) candidate pairs with the positive
    scored strictly higher. None when either side is empty.
    """
    items, scores = ranking.items, ranking.scores
    if candidates is not None:
        keep = np.isin(items, np.fromiter(candidates, dtype=np.int64))
        items, scores = items[keep], scores[keep]
    is_pos = np.isin(items, np.fromiter(positives, dtype=np.int64))
    pos_scores = scores[is_pos]
    neg_scores = np.sort(scores[~is_pos])
    if len(pos_scores) == 0 or len(neg_scores) == 0:
        return None
    # negatives strictly below each positive; ties count as wrong
    below = np.searchsorted(neg_scores, pos_scores, side="left")
    return float(below.sum()) / (len(pos_scores) * len(neg_scores))


def precision_at_k(ranking: Ranking, positives: Iterable[int], k: int) -> float:
    items = _ranked_items(ranking)
    k_eff = _cutoff(len(items), k, "precision")
    if k_eff == 0:
        return 0.0
    hits = np.isin(items[:k_eff], np.fromiter(positives, dtype=np.int64))
    return float(hits.sum()) / k_eff


def ap_at_n(ranking: Ranking, positives: Iterable[int], n: int) -> float:
    """Mean of precision@k over hit positions k <= n, over min(|positives|, n)"""
    items = _ranked_items(ranking)
    positives = np.unique(np.fromiter(positives, dtype=np.int64))
    n_eff = _cutoff(len(items), n, "AP")
    if len(positives) == 0 or n_eff == 0:
        return 0.0
    hits = np.isin(items[:n_eff], positives)
    precision = np.cumsum(hits) / np.arange(1, n_eff + 1)
    return float(precision[hits].sum()) / min(len(positives), n)


def evaluate_user(recommendation: Recommendation, heldout: Sequence[int], top_n: int) -> UserMetricsRow:
    heldout = np.asarray(heldout, dtype=np.int64)
    n_cand = len(recommendation.items)
    n_pos = int(np.isin(recommendation.items, heldout).sum())
    row = UserMetricsRow(user=recommendation.user, n_pos=n_pos, n_neg=n_cand - n_pos)
    if n_pos == 0 or row.n_neg == 0:
        row.skipped = True
        row.reason = "no held-out positives" if n_pos == 0 else "no negatives"
        return row

    row.auc = auc_user(heldout, recommendation)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncatedRankingWarning)
        row.ap_at_n = ap_at_n(recommendation, heldout, top_n)
        row.precision_at_n = precision_at_k(recommendation, heldout, top_n)
    return row


def aggregate(
    rows: Sequence[UserMetricsRow],
    top_n: int = 500,
    fold: Optional[int] = None,
    seed: Optional[int] = None,
    config: Optional[Dict[str, Any]] = None,
    n_failed: int = 0,
    keep_per_user: bool = False,
) -> MetricsReport:
    """Unweighted means over evaluated users; skipped users are only counted"""
    evaluated = [r for r in rows if not r.skipped]
    report = MetricsReport(
        top_n=top_n,
        n_users=len(evaluated),
        n_skipped=len(rows) - len(evaluated),
        n_failed=n_failed,
        zero_users=len(evaluated) == 0,
        std_undefined=len(evaluated) < 2,
        fold=fold,
        seed=seed,
        config=config or {},
        per_user=list(rows) if keep_per_user else None,
    )
    if not evaluated:
        logger.warning("no users could be evaluated (fold=%s)", fold)
        return report

    auc = np.array([r.auc for r in evaluated])
    report.auc = float(np.clip(auc.mean(), 0.0, 1.0))
    report.auc_user_std = float(auc.std(ddof=1)) if len(evaluated) > 1 else 0.0
    report.map_at_n = float(np.clip(np.mean([r.ap_at_n for r in evaluated]), 0.0, 1.0))
    report.precision_at_n = float(np.mean([r.precision_at_n for r in evaluated]))
    return report


def combine_folds(reports: List[MetricsReport], config: Optional[Dict[str, Any]] = None) -> ExperimentReport:
    """Fold mean and fold standard deviation of AUC and mAP"""
    usable = [r for r in reports if not r.zero_users]
    auc = np.array([r.auc for r in usable])
    maps = np.array([r.map_at_n for r in usable])
    user_std = np.array([r.auc_user_std for r in usable])

    def _std(values: np.ndarray) -> float:
        return float(values.std(ddof=1)) if len(values) > 1 else 0.0

    return ExperimentReport(
        auc_mean=float(auc.mean()) if len(auc) else 0.0,
        auc_fold_std=_std(auc),
        map_mean=float(maps.mean()) if len(maps) else 0.0,
        map_fold_std=_std(maps),
        auc_user_std_mean=float(user_std.mean()) if len(user_std) else 0.0,
        n_folds=len(usable),
        folds=list(reports),
        config=config or {},
    )


def metrics_summary(report: Union[MetricsReport, ExperimentReport]) -> str:
    """One-line summary for the console"""
    if isinstance(report, ExperimentReport):
        return (f"AUC {report.auc_mean:.4f} +/- {report.auc_fold_std:.4f} | "
                f"mAP {report.map_mean:.4f} +/- {report.map_fold_std:.4f} over {report.n_folds} folds")
    return (f"AUC {report.auc:.4f} (user std {report.auc_user_std:.4f}) | "
            f"mAP@{report.top_n} {report.map_at_n:.4f} | users {report.n_users} "
            f"(skipped {report.n_skipped}, failed {report.n_failed})")


__all__ = [
    'auc_user', 'precision_at_k', 'ap_at_n', 'evaluate_user', 'aggregate',
    'combine_folds', 'metrics_summary',
]
