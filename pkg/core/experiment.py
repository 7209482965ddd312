# core/experiment.py
"""
Runs recommenders over the test users of a fold and evaluates them.

Users are independent: a thread pool maps over the sorted user list and
results come back in that order, so the thread count never changes output.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from core.dataset import InteractionMatrix, apply_fold
from core.exceptions import DataWarning, RecsysError
from core.metrics import aggregate, combine_folds, evaluate_user
from core.recommender_engine import RecommenderEngine
from core.utils import GramCache, Stopwatch, TimingLog
from models.schemas import ExperimentReport, FoldPlan, MetricsReport, RunConfig
from recommenders.base import BaseRecommender, Recommendation

logger = logging.getLogger(__name__)


class UserFailureWarning(DataWarning):
    """A single user could not be trained or scored"""


@dataclass
class FoldResult:
    report: MetricsReport
    recommendations: Dict[int, Recommendation] = field(default_factory=dict)
    failures: Dict[int, str] = field(default_factory=dict)


def _recommend_one(recommender: BaseRecommender, user: int) -> Union[Recommendation, str]:
    try:
        return recommender.recommend(user)
    except (RecsysError, ArithmeticError, ValueError) as e:
        return f"{type(e).__name__}: {e}"


def recommend_users(
    recommender: BaseRecommender,
    users: Iterable[int],
    threads: int = 1,
    progress: bool = False,
) -> Tuple[Dict[int, Recommendation], Dict[int, str]]:
    """Recommendations for every user; failures are reported, never raised"""
    users = sorted(int(u) for u in users)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(lambda u: _recommend_one(recommender, u), users)
            results = list(tqdm(results, total=len(users), desc=recommender.method_name, disable=not progress))
    else:
        results = [_recommend_one(recommender, u)
                   for u in tqdm(users, desc=recommender.method_name, disable=not progress)]

    recommendations: Dict[int, Recommendation] = {}
    failures: Dict[int, str] = {}
    for user, result in zip(users, results):
        if isinstance(result, Recommendation):
            recommendations[user] = result
        else:
            failures[user] = result
            warnings.warn(f"user {user} skipped: {result}", UserFailureWarning, stacklevel=2)
    return recommendations, failures


def evaluate_recommendations(
    recommendations: Dict[int, Recommendation],
    test: Dict[int, np.ndarray],
    top_n: int = 500,
    fold: Optional[int] = None,
    seed: Optional[int] = None,
    config: Optional[dict] = None,
    n_failed: int = 0,
    keep_per_user: bool = False,
) -> MetricsReport:
    rows = [evaluate_user(recommendations[u], test[u], top_n)
            for u in sorted(test) if u in recommendations]
    return aggregate(rows, top_n=top_n, fold=fold, seed=seed, config=config,
                     n_failed=n_failed, keep_per_user=keep_per_user)


def run_fold(
    train: InteractionMatrix,
    test: Dict[int, np.ndarray],
    recommender: BaseRecommender,
    top_n: int = 500,
    threads: int = 1,
    fold: Optional[int] = None,
    seed: Optional[int] = None,
    config: Optional[dict] = None,
    keep_per_user: bool = False,
    timing: Optional[TimingLog] = None,
    progress: bool = False,
) -> FoldResult:
    """Fit on ``train``, rank every test user and evaluate against ``test``"""
    if not test:
        logger.warning("fold %s has no test users", fold)
        return FoldResult(report=aggregate([], top_n=top_n, fold=fold, seed=seed, config=config))

    with Stopwatch() as fit_time:
        recommender.fit(train, timing=timing)
    with Stopwatch() as rec_time:
        recommendations, failures = recommend_users(recommender, test.keys(), threads, progress)
    with Stopwatch() as eval_time:
        report = evaluate_recommendations(recommendations, test, top_n=top_n, fold=fold, seed=seed,
                                          config=config, n_failed=len(failures),
                                          keep_per_user=keep_per_user)

    if timing is not None:
        common = {"fold": fold, "method": recommender.method_name}
        timing.log_phase("fit", fit_time.elapsed(), **common)
        timing.log_phase("solve", sum(r.timings.get("solve", 0.0) for r in recommendations.values()),
                         users=len(recommendations), **common)
        timing.log_phase("score", sum(r.timings.get("rank", 0.0) for r in recommendations.values()),
                         **common)
        timing.log_phase("recommend", rec_time.elapsed(), threads=threads, **common)
        timing.log_phase("metrics", eval_time.elapsed(), **common)
    return FoldResult(report=report, recommendations=recommendations, failures=failures)


def run_experiment(
    train: InteractionMatrix,
    test: Dict[int, np.ndarray],
    recommender: BaseRecommender,
    top_n: int = 500,
    threads: int = 1,
    **kwargs,
) -> MetricsReport:
    return run_fold(train, test, recommender, top_n=top_n, threads=threads, **kwargs).report


def run_protocol(
    mtx: InteractionMatrix,
    plan: FoldPlan,
    config: RunConfig,
    engine: Optional[RecommenderEngine] = None,
    cache: Optional[GramCache] = None,
    timing: Optional[TimingLog] = None,
    progress: bool = False,
    keep_per_user: bool = False,
) -> Tuple[ExperimentReport, List[FoldResult]]:
    """Every fold in ``config.fold_ids()`` plus the fold-level summary"""
    engine = engine or RecommenderEngine()
    results: List[FoldResult] = []
    for fold in config.fold_ids():
        train, test = apply_fold(mtx, plan, fold)
        recommender = engine.create(config, cache=cache)
        result = run_fold(train, test, recommender, top_n=config.top_n, threads=config.threads,
                          fold=fold, seed=config.seed, config=config.echo(),
                          keep_per_user=keep_per_user, timing=timing, progress=progress)
        logger.info("fold %d: AUC %.4f, mAP@%d %.4f (%d users, %d failed)", fold, result.report.auc,
                    config.top_n, result.report.map_at_n, result.report.n_users, result.report.n_failed)
        results.append(result)
    return combine_folds([r.report for r in results], config=config.echo()), results


__all__ = [
    'FoldResult', 'UserFailureWarning', 'recommend_users', 'evaluate_recommendations',
    'run_fold', 'run_experiment', 'run_protocol',
]
