# core/solver.py
"""
Projected gradient solver for

    min_alpha  alpha' K alpha + lam ||alpha||^2 - 2 alpha' q
    s.t.       alpha >= 0, sum(alpha) = 1

The step size uses a bound on the curvature of K restricted to the simplex
tangent space, so adding a constant to every entry of K and q changes
neither the iterates nor the result.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from core.exceptions import ContractError, DataWarning, NumericError

logger = logging.getLogger(__name__)


class ConvergenceWarning(DataWarning):
    """The solver stopped at max_iter above tolerance"""


@dataclass
class UserSolution:
    alpha: np.ndarray
    iterations: int = 0
    final_gap: float = 0.0
    converged: bool = True
    objective: float = 0.0
    objective_history: List[float] = field(default_factory=list)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} by sorting"""
    d = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, d + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[cond][-1] / float(rho)
    w = np.maximum(v - theta, 0.0)
    # renormalize the rounding residue onto the support
    w /= w.sum()
    return w


def qp_objective(K: np.ndarray, q: np.ndarray, lambda_p: float, alpha: np.ndarray) -> float:
    return float(alpha @ K @ alpha + lambda_p * alpha @ alpha - 2.0 * alpha @ q)


def qp_gradient(K: np.ndarray, q: np.ndarray, lambda_p: float, alpha: np.ndarray) -> np.ndarray:
    return 2.0 * (K @ alpha + lambda_p * alpha - q)


def tangent_curvature_bound(K: np.ndarray, lambda_p: float) -> float:
    """
    Upper bound on the Lipschitz constant of the gradient along the simplex.

    Computed on P K P with P the centering projector, which removes any
    constant added to K.
    """
    row_mean = K.mean(axis=1, keepdims=True)
    col_mean = K.mean(axis=0, keepdims=True)
    centered = K - row_mean - col_mean + K.mean()
    bound = min(float(np.trace(centered)), float(np.abs(centered).sum(axis=1).max()))
    return 2.0 * (max(bound, 0.0) + lambda_p)


def solve_simplex_qp(
    K: np.ndarray,
    q: np.ndarray,
    lambda_p: float,
    tol: float = 1e-6,
    max_iter: int = 1000,
    step_scale: float = 1.0,
    track_objective: bool = False,
    alpha0: Optional[np.ndarray] = None,
) -> UserSolution:
    """
    Minimize over the probability simplex with accelerated projected
    gradient steps. The objective never increases between iterations.

    The optimality gap is the norm of the gradient mapping scaled by L;
    it is zero exactly at the minimizer.
    """
    K = np.asarray(K, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64).ravel()
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ContractError(f"K must be square, got shape {K.shape}")
    if q.shape[0] != K.shape[0]:
        raise ContractError(f"q has length {q.shape[0]} but K is {K.shape[0]}x{K.shape[1]}")
    if lambda_p < 0:
        raise ContractError(f"lambda_p must be >= 0, got {lambda_p}")
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(q))):
        raise NumericError("non-finite values in K or q")

    d = K.shape[0]
    if d == 0:
        raise ContractError("empty problem: the user has no positive items")
    if d == 1:
        alpha = np.ones(1)
        return UserSolution(alpha=alpha, objective=qp_objective(K, q, lambda_p, alpha))

    alpha = project_simplex(np.asarray(alpha0, dtype=np.float64)) if alpha0 is not None else np.full(d, 1.0 / d)
    L = tangent_curvature_bound(K, lambda_p)
    history: List[float] = []
    if track_objective:
        history.append(qp_objective(K, q, lambda_p, alpha))

    if L <= 0.0:
        # objective is linear along the simplex: mass goes to the largest q
        top = np.isclose(q, q.max(), rtol=0.0, atol=1e-15)
        alpha = top / top.sum()
        return UserSolution(alpha=alpha, objective=qp_objective(K, q, lambda_p, alpha),
                            objective_history=history)

    step = step_scale / L
    objective = qp_objective(K, q, lambda_p, alpha)
    y = alpha.copy()
    t = 1.0
    gap = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grad = qp_gradient(K, q, lambda_p, alpha)
        gap = L * float(np.linalg.norm(alpha - project_simplex(alpha - grad / L)))
        if gap <= tol:
            iterations -= 1
            break

        # accelerated step, restarted whenever it would increase the objective
        z = project_simplex(y - step * qp_gradient(K, q, lambda_p, y))
        z_objective = qp_objective(K, q, lambda_p, z)
        previous = alpha
        if z_objective > objective:
            y, t = alpha.copy(), 1.0
            if track_objective:
                history.append(objective)
            continue
        alpha, objective = z, z_objective
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = alpha + ((t - 1.0) / t_next) * (alpha - previous)
        t = t_next
        if track_objective:
            history.append(objective)

    converged = gap <= tol
    if not converged:
        warnings.warn(f"simplex QP stopped after {max_iter} iterations with gap {gap:.3g} > {tol:g}",
                      ConvergenceWarning, stacklevel=2)
    return UserSolution(
        alpha=alpha,
        iterations=iterations,
        final_gap=float(gap),
        converged=converged,
        objective=qp_objective(K, q, lambda_p, alpha),
        objective_history=history,
    )


__all__ = [
    'UserSolution', 'ConvergenceWarning', 'project_simplex', 'qp_objective',
    'qp_gradient', 'tangent_curvature_bound', 'solve_simplex_qp',
]
