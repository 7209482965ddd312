# tests/test_solver.py
"""
Test cases for the simplex-constrained QP solver
"""

import itertools
import warnings

import numpy as np
import pytest
from scipy.optimize import minimize

from conftest import random_psd
from core.exceptions import ContractError, NumericError
from core.solver import (
    ConvergenceWarning, project_simplex, qp_gradient, qp_objective, solve_simplex_qp,
)

TOL = 1e-6


def slsqp_reference(K, q, lam):
    """Independent optimizer over the simplex"""
    d = len(q)
    result = minimize(
        lambda a: qp_objective(K, q, lam, a),
        np.full(d, 1.0 / d),
        jac=lambda a: qp_gradient(K, q, lam, a),
        bounds=[(0.0, 1.0)] * d,
        constraints=[{"type": "eq", "fun": lambda a: a.sum() - 1.0, "jac": lambda a: np.ones(d)}],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    return result.x


def test_single_positive():
    """One coordinate is forced to 1 without iterating."""
    sol = solve_simplex_qp(np.array([[3.0]]), np.array([0.2]), 0.01)
    assert sol.alpha.tolist() == [1.0]
    assert sol.iterations == 0


def test_identity_kernel_gives_uniform():
    sol = solve_simplex_qp(np.eye(4), np.zeros(4), 0.0)
    assert np.allclose(sol.alpha, 0.25, atol=1e-9)


def test_contract_errors():
    with pytest.raises(ContractError):
        solve_simplex_qp(np.eye(3), np.zeros(2), 0.01)
    with pytest.raises(ContractError):
        solve_simplex_qp(np.ones((2, 3)), np.zeros(2), 0.01)
    with pytest.raises(NumericError):
        solve_simplex_qp(np.array([[1.0, np.nan], [np.nan, 1.0]]), np.zeros(2), 0.01)


def test_projection_onto_simplex(rng):
    for _ in range(50):
        v = rng.normal(scale=3.0, size=int(rng.integers(1, 12)))
        w = project_simplex(v)
        assert w.min() >= 0.0
        assert abs(w.sum() - 1.0) <= 1e-12
    assert np.allclose(project_simplex(np.array([0.2, 0.3, 0.5])), [0.2, 0.3, 0.5])


def test_grid_oracle_three_items(rng):
    """3x3 problems against an exhaustive simplex grid at resolution 1e-3."""
    steps = 1000
    grid = np.array([(i, j, steps - i - j) for i in range(steps + 1) for j in range(steps + 1 - i)]) / steps
    for _ in range(5):
        K = random_psd(rng, 3)
        q = rng.normal(size=3)
        sol = solve_simplex_qp(K, q, 0.01, tol=TOL)
        values = np.einsum("ni,ij,nj->n", grid, K, grid) + 0.01 * (grid ** 2).sum(axis=1) - 2 * grid @ q
        assert sol.objective <= values.min() + 1e-4


def test_five_item_instances_match_independent_optimizer(rng):
    """Random 5x5 PSD problems agree with SLSQP to 1e-4 in objective."""
    for _ in range(20):
        K = random_psd(rng, 5, rank=3)
        q = rng.normal(size=5)
        sol = solve_simplex_qp(K, q, 0.01, tol=TOL, max_iter=5000)
        reference = slsqp_reference(K, q, 0.01)
        assert sol.objective <= qp_objective(K, q, 0.01, reference) + 1e-4


@pytest.mark.property
def test_iterates_stay_feasible_and_objective_is_monotone(rng):
    for _ in range(30):
        d = int(rng.integers(2, 15))
        K = random_psd(rng, d)
        q = rng.normal(size=d)
        sol = solve_simplex_qp(K, q, 0.01, tol=TOL, max_iter=3000, track_objective=True)
        assert sol.alpha.min() >= 0.0
        assert abs(sol.alpha.sum() - 1.0) <= 1e-9
        assert np.all(np.diff(sol.objective_history) <= 1e-12)
        uniform = np.full(d, 1.0 / d)
        assert sol.objective <= qp_objective(K, q, 0.01, uniform) + 1e-12


@pytest.mark.property
def test_shift_invariance():
    """Adding c to every entry of K and q leaves alpha unchanged (100 instances x 3 offsets)."""
    rng = np.random.default_rng(77)
    for _ in range(100):
        d = int(rng.integers(2, 12))
        K = random_psd(rng, d)
        q = rng.uniform(0.0, 1.0, size=d)
        base = solve_simplex_qp(K, q, 0.01, tol=TOL, max_iter=5000)
        for c in (0.1, 1.0, 10.0):
            shifted = solve_simplex_qp(K + c, q + c, 0.01, tol=TOL, max_iter=5000)
            assert np.abs(base.alpha - shifted.alpha).max() <= 10 * TOL


def test_zero_shift_is_identical_run(rng):
    K = random_psd(rng, 6)
    q = rng.normal(size=6)
    a = solve_simplex_qp(K, q, 0.01)
    b = solve_simplex_qp(K + 0.0, q + 0.0, 0.01)
    assert np.array_equal(a.alpha, b.alpha)
    assert a.iterations == b.iterations


@pytest.mark.property
def test_gradient_matches_finite_differences():
    """Analytic gradient vs central differences, relative error <= 1e-6 (50 instances)."""
    rng = np.random.default_rng(5)
    h = 1e-5
    for _ in range(50):
        d = int(rng.integers(2, 10))
        K = random_psd(rng, d)
        q = rng.normal(size=d)
        alpha = rng.random(d)
        analytic = qp_gradient(K, q, 0.01, alpha)
        numeric = np.array([
            (qp_objective(K, q, 0.01, alpha + h * e) - qp_objective(K, q, 0.01, alpha - h * e)) / (2 * h)
            for e in np.eye(d)
        ])
        assert np.linalg.norm(analytic - numeric) <= 1e-6 * max(np.linalg.norm(analytic), 1.0)


def test_exchangeable_coordinates_get_equal_weight():
    """Duplicate rows/columns in K and equal q give equal alpha."""
    K = np.array([[1.0, 1.0, 0.2], [1.0, 1.0, 0.2], [0.2, 0.2, 1.0]])
    q = np.array([0.3, 0.3, 0.1])
    sol = solve_simplex_qp(K, q, 0.01)
    assert sol.alpha[0] == pytest.approx(sol.alpha[1], abs=1e-9)


def test_linear_objective_puts_mass_on_best_coordinate():
    """With a constant K and no ridge, the largest q wins."""
    sol = solve_simplex_qp(np.full((3, 3), 2.0), np.array([0.1, 0.7, 0.2]), 0.0)
    assert sol.alpha.tolist() == [0.0, 1.0, 0.0]


def test_max_iter_warning(rng):
    K = random_psd(rng, 8)
    q = rng.normal(size=8)
    with pytest.warns(ConvergenceWarning):
        sol = solve_simplex_qp(K, q, 0.0, tol=1e-30, max_iter=3)
    assert not sol.converged
    assert sol.iterations == 3


def test_over_relaxation_reaches_same_minimizer(rng):
    K = random_psd(rng, 6)
    q = rng.normal(size=6)
    plain = solve_simplex_qp(K, q, 0.01, max_iter=5000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        relaxed = solve_simplex_qp(K, q, 0.01, step_scale=1.5, max_iter=5000)
    assert relaxed.objective == pytest.approx(plain.objective, abs=1e-6)
