# core/analysis.py
"""
Gram sparsity estimates and long-tail fits.

The density estimate assumes every rating is present independently with
probability p; two items then share at least one user with probability
1 - (1 - p^2)^n.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from core.dataset import InteractionMatrix
from core.exceptions import ContractError, InsufficientDataError, RecsysError
from core.gram import ZERO_TOL, GramMatrix, ItemVectors, compute_gram
from core.kernel_engine import make_spec
from models.schemas import AnalysisReport, DensityReport, TailAxis, TailFit

logger = logging.getLogger(__name__)


def estimate_kernel_density(p: float, n: int, m: int) -> DensityReport:
    if not 0.0 <= p <= 1.0 or not np.isfinite(p):
        raise ContractError(f"p must lie in [0, 1], got {p}")
    if n < 1 or m < 1:
        raise ContractError(f"n and m must be >= 1, got n={n}, m={m}")
    if p == 1.0:
        p_off = 1.0
    else:
        p_off = float(-np.expm1(n * np.log1p(-p * p)))
    d_k = (m + (m * m - m) * p_off) / float(m * m)
    return DensityReport(p=p, n=n, m=m, p_offdiag=p_off, d_k=min(max(d_k, 1.0 / m), 1.0))


def empirical_density(gram: GramMatrix) -> float:
    """Stored nonzeros (|value| > 1e-12) over m^2, m being the full catalog"""
    return int(np.count_nonzero(np.abs(gram.matrix.data) > ZERO_TOL)) / float(gram.m) ** 2


def linear_gram_density(mtx: InteractionMatrix, threads: int = 1) -> float:
    gram = compute_gram(ItemVectors(mtx), make_spec("linear"), threads=threads)
    return empirical_density(gram)


def tail_fit(counts, axis: Optional[TailAxis] = None) -> TailFit:
    """Least squares of log(count) on log(rank) over positive counts"""
    counts = np.asarray(counts, dtype=np.float64)
    counts = np.sort(counts[counts > 0])[::-1]
    if len(counts) < 3:
        raise InsufficientDataError(f"need at least 3 positive counts, got {len(counts)}")
    x = np.log(np.arange(1, len(counts) + 1, dtype=np.float64))
    y = np.log(counts)
    if np.ptp(y) == 0.0:
        return TailFit(axis=axis, exponent=0.0, intercept=float(y[0]), r2=1.0, n_points=len(counts))
    fit = stats.linregress(x, y)
    return TailFit(axis=axis, exponent=float(fit.slope), intercept=float(fit.intercept),
                   r2=float(fit.rvalue ** 2), n_points=len(counts))


def rank_frequency(counts) -> pd.DataFrame:
    """Plot-ready (rank, count) table, most frequent first"""
    counts = np.asarray(counts)
    counts = np.sort(counts[counts > 0])[::-1]
    return pd.DataFrame({"rank": np.arange(1, len(counts) + 1), "count": counts.astype(np.int64)})


def tail_report(mtx: InteractionMatrix) -> Tuple[Dict[TailAxis, Optional[TailFit]], Dict[TailAxis, pd.DataFrame], Dict[str, str]]:
    """Fits and plot tables for both axes; per-axis failures are collected, not raised"""
    per_axis = {
        TailAxis.ITEM_POPULARITY: mtx.item_counts,
        TailAxis.USER_ACTIVITY: mtx.user_counts,
    }
    fits: Dict[TailAxis, Optional[TailFit]] = {}
    tables: Dict[TailAxis, pd.DataFrame] = {}
    errors: Dict[str, str] = {}
    for axis, counts in per_axis.items():
        tables[axis] = rank_frequency(counts)
        try:
            fits[axis] = tail_fit(counts, axis=axis)
        except InsufficientDataError as e:
            logger.warning("%s fit skipped: %s", axis.value, e)
            fits[axis] = None
            errors[axis.value] = str(e)
    return fits, tables, errors


def analyze(mtx: InteractionMatrix, threads: int = 1, config: Optional[dict] = None) -> Tuple[AnalysisReport, Dict[TailAxis, pd.DataFrame]]:
    """Density estimate at p = density of R, measured linear gram density and both tails"""
    density = estimate_kernel_density(mtx.density, mtx.n, mtx.m)
    errors: Dict[str, str] = {}
    try:
        density.empirical = linear_gram_density(mtx, threads=threads)
    except RecsysError as e:
        errors["empirical_density"] = str(e)
    fits, tables, tail_errors = tail_report(mtx)
    errors.update(tail_errors)
    report = AnalysisReport(
        stats=mtx.stats(),
        density=density,
        item_fit=fits[TailAxis.ITEM_POPULARITY],
        user_fit=fits[TailAxis.USER_ACTIVITY],
        errors=errors,
        config=config or {},
    )
    logger.info("d(K) estimate %.4f%%, measured %s", 100 * density.d_k,
                "n/a" if density.empirical is None else f"{100 * density.empirical:.4f}%")
    return report, tables


__all__ = [
    'estimate_kernel_density', 'empirical_density', 'linear_gram_density', 'tail_fit',
    'rank_frequency', 'tail_report', 'analyze',
]
