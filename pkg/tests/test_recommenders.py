# tests/test_recommenders.py
"""
Test cases for ECF-OMD, CF-KOMD, MSDW and the dense CF-OMD reference
"""

import numpy as np
import pytest

from conftest import make_instance
from core.dataset import InteractionMatrix
from core.exceptions import DegenerateUserError, SizeCapError
from core.gram import ItemVectors
from core.kernel_engine import make_spec
from core.recommender_engine import RecommenderEngine
from core.solver import qp_objective
from models.schemas import KernelFamily, Method, QSource, RunConfig
from recommenders import (
    CFKOMDRecommender, CFOMDReference, ECFOMDRecommender, MSDWRecommender, NegativeCentroidCache, rank_items,
)
from recommenders.cfomd_reference import cfomd_objective

TOL = 1e-6


def ranks_agree(a: np.ndarray, b: np.ndarray, score_a: np.ndarray, atol: float = 1e-8) -> bool:
    """Same order, allowing swaps only between items whose scores tie within atol"""
    if np.array_equal(a, b):
        return True
    pos_b = {item: k for k, item in enumerate(b.tolist())}
    score = dict(zip(a.tolist(), score_a.tolist()))
    for x, y in zip(a[:-1].tolist(), a[1:].tolist()):
        if pos_b[x] > pos_b[y] and score[x] - score[y] > atol:
            return False
    return True


def pairwise_agreement(scores_a: np.ndarray, scores_b: np.ndarray) -> float:
    diff_a = np.sign(scores_a[:, None] - scores_a[None, :])
    diff_b = np.sign(scores_b[:, None] - scores_b[None, :])
    mask = ~np.eye(len(scores_a), dtype=bool)
    return float((diff_a == diff_b)[mask].mean())


def test_rank_items_tie_breaking_and_unreachable():
    """Descending score, ties by id, excluded removed, unreachable last."""
    scores = np.array([0.5, 0.9, 0.5, 0.1, 0.9, 0.0])
    rec = rank_items(0, scores, excluded=np.array([3]), unreachable=np.array([1]))
    assert rec.items.tolist() == [4, 0, 2, 5, 1]
    assert rec.scores[-1] == -np.inf


def test_negative_centroid_cache_matches_direct_sum(small_instance):
    v = ItemVectors(small_instance)
    cache = NegativeCentroidCache(v)
    assert np.allclose(cache.total, cache.recompute(), atol=1e-10)
    X = v.X.toarray()
    for u in range(small_instance.n):
        pos = small_instance.items_of(u)
        neg = np.setdiff1d(np.arange(small_instance.m), pos)
        assert np.allclose(cache.negative_centroid(pos), X[:, neg].mean(axis=1), atol=1e-10)
    assert np.allclose(cache.negative_centroid(np.array([], dtype=int)), cache.total / small_instance.m)


def test_ecf_solution_beats_uniform(small_instance):
    rec = ECFOMDRecommender(lambda_p=0.01, tol=TOL).fit(small_instance)
    for u in range(small_instance.n):
        sol, pos, mu = rec.train_user(u)
        Xp = rec.vectors.X[:, pos]
        K = (Xp.T @ Xp).toarray()
        q = np.asarray(Xp.T @ mu).ravel()
        uniform = np.full(len(pos), 1.0 / len(pos))
        assert sol.objective <= qp_objective(K, q, 0.01, uniform) + 1e-12


def test_ecf_excludes_training_positives(small_instance):
    rec = ECFOMDRecommender().fit(small_instance)
    ranking = rec.recommend(3)
    assert set(ranking.items.tolist()).isdisjoint(small_instance.items_of(3).tolist())
    assert len(ranking) == small_instance.m_neg(3)
    assert np.all(np.diff(ranking.scores) <= 0)


def test_degenerate_users_are_refused():
    mtx = InteractionMatrix.from_dense(np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 0.0]]))
    rec = ECFOMDRecommender().fit(mtx)
    with pytest.raises(DegenerateUserError):
        rec.recommend(0)
    with pytest.raises(DegenerateUserError):
        rec.recommend(2)


def test_kernel_scores_match_feature_space(small_instance):
    """sum_j alpha_j K_ij - q_i equals x_i . (X_u+ alpha - mu_u-) for the linear kernel."""
    komd = CFKOMDRecommender(make_spec("linear"), q_source=QSource.EXACT, tol=TOL).fit(small_instance)
    for u in (0, 5, 9):
        sol, pos, q = komd.train_user(u)
        scores, _ = komd.score_user(u)
        X = komd.vectors.X.toarray()
        mu = NegativeCentroidCache(komd.vectors).negative_centroid(pos)
        w = X[:, pos] @ sol.alpha - mu
        assert np.allclose(scores, X.T @ w, atol=1e-10)


@pytest.mark.property
def test_linear_komd_with_exact_q_equals_ecf():
    """CF-KOMD(linear, reduced, exact q) and ECF-OMD rank identically on 50 instances."""
    for seed in range(50):
        mtx = make_instance(1000 + seed, n=25, m=18)
        ecf = ECFOMDRecommender(tol=TOL).fit(mtx)
        komd = CFKOMDRecommender(make_spec("linear"), q_source=QSource.EXACT, tol=TOL).fit(mtx)
        for u in range(mtx.n):
            a, b = ecf.recommend(u), komd.recommend(u)
            assert np.abs(a.solution.alpha - b.solution.alpha).max() <= 10 * TOL
            assert ranks_agree(a.items, b.items, a.scores)


def test_single_positive_linear_ranking():
    """alpha = [1]: candidates ordered by K(x_i, x_j) - q_tilde_i."""
    dense = make_instance(21).to_dense()
    u = 0
    j = int(np.flatnonzero(dense[u])[0])
    dense[u] = 0.0
    dense[u, j] = 1.0
    single = InteractionMatrix.from_dense(dense)
    komd = CFKOMDRecommender(make_spec("linear")).fit(single)
    ranking = komd.recommend(u)
    assert ranking.solution.alpha.tolist() == [1.0]

    expected = komd.gram.to_dense()[:, j] - komd.q_tilde.values
    finite = np.isfinite(ranking.scores)
    assert np.allclose(ranking.scores[finite], expected[ranking.items[finite]], atol=1e-12)
    assert np.all(np.diff(ranking.scores[finite]) <= 0)


def test_polynomial_degree_one_equals_linear(small_instance):
    linear = CFKOMDRecommender(make_spec("linear"), tol=TOL).fit(small_instance)
    poly = CFKOMDRecommender(make_spec("polynomial", c=1.0, degree=1), tol=TOL).fit(small_instance)
    for u in range(small_instance.n):
        a, b = linear.recommend(u), poly.recommend(u)
        assert np.abs(a.solution.alpha - b.solution.alpha).max() <= 10 * TOL
        assert ranks_agree(a.items, b.items, a.scores)


def test_full_and_reduced_polynomial_rank_alike(small_instance):
    """Removing the zero-degree term changes neither alpha nor the ranking."""
    full = CFKOMDRecommender(make_spec("polynomial", c=2.0, degree=2, reduced=False), tol=TOL).fit(small_instance)
    reduced = CFKOMDRecommender(make_spec("polynomial", c=2.0, degree=2, reduced=True), tol=TOL).fit(small_instance)
    for u in range(small_instance.n):
        a, b = full.recommend(u), reduced.recommend(u)
        assert np.abs(a.solution.alpha - b.solution.alpha).max() <= 10 * TOL
        assert ranks_agree(b.items, a.items, b.scores)


def test_duplicate_positives_share_weight():
    """Items with identical user sets are exchangeable."""
    dense = np.array([
        [1, 1, 1, 0, 0],
        [1, 1, 0, 1, 0],
        [1, 1, 0, 0, 1],
        [0, 0, 1, 1, 0],
    ], dtype=float)
    mtx = InteractionMatrix.from_dense(dense)
    komd = CFKOMDRecommender(make_spec("tanimoto")).fit(mtx)
    sol, pos, _ = komd.train_user(0)
    assert pos.tolist() == [0, 1, 2]
    assert sol.alpha[0] == pytest.approx(sol.alpha[1], abs=1e-9)


def test_msdw_similarity_cases():
    dense = np.array([
        [1, 1, 0, 1],
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, 0],
    ], dtype=float)
    mtx = InteractionMatrix.from_dense(dense)
    rec = MSDWRecommender(alpha=0.5).fit(mtx)
    assert rec.similarity(0, 1) == pytest.approx(1.0)
    assert rec.similarity(0, 2) == 0.0
    # |U_0 n U_3| = 1, |U_0| = 2, |U_3| = 2
    assert rec.similarity(0, 3) == pytest.approx(1.0 / 2.0)
    for alpha in (0.0, 0.3, 1.0):
        assert MSDWRecommender(alpha=alpha).fit(mtx).similarity(1, 0) == pytest.approx(1.0)


def test_msdw_half_alpha_is_cosine(small_instance):
    rec = MSDWRecommender(alpha=0.5, locality_q=1.0).fit(small_instance)
    X = ItemVectors(small_instance).X.toarray()
    cosine = X.T @ X
    for u in (0, 4):
        scores, _ = rec.score_user(u)
        pos = small_instance.items_of(u)
        assert np.allclose(scores, cosine[:, pos].sum(axis=1))


def test_msdw_locality_exponent(small_instance):
    base = MSDWRecommender(alpha=0.2, locality_q=1.0).fit(small_instance)
    cubed = MSDWRecommender(alpha=0.2, locality_q=3.0).fit(small_instance)
    pos = small_instance.items_of(2)
    i = np.setdiff1d(np.arange(small_instance.m), pos)[0]
    expected = sum(base.similarity(i, j) ** 3 for j in pos)
    assert cubed.score_user(2)[0][i] == pytest.approx(expected)


def test_reference_one_positive_one_negative():
    mtx = InteractionMatrix.from_dense(np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    ref = CFOMDReference(lambda_p=0.01, lambda_n=1.0).fit(mtx)
    alpha, pos, neg, _ = ref.solve(0)
    assert alpha.tolist() == [1.0, 1.0]


def test_reference_size_cap():
    with pytest.raises(SizeCapError):
        CFOMDReference(cap=10).fit(make_instance(1, n=30, m=20))


def test_reference_beats_random_feasible_points(rng):
    """The returned alpha is no worse than 1000 random points of both simplices."""
    mtx = make_instance(31, n=30, m=20)
    ref = CFOMDReference(lambda_p=0.01, lambda_n=0.5, tol=1e-9, max_iter=5000, outer_iter=500).fit(mtx)
    alpha, pos, neg, summary = ref.solve(0)
    for _ in range(1000):
        trial = np.zeros(mtx.m)
        trial[pos] = rng.dirichlet(np.ones(len(pos)))
        trial[neg] = rng.dirichlet(np.ones(len(neg)))
        assert summary.objective <= cfomd_objective(ref.K, pos, neg, trial, 0.01, 0.5) + 1e-9


@pytest.mark.property
def test_reference_with_huge_lambda_n_matches_ecf():
    """lambda_n = 1e8 flattens negatives; rankings agree with ECF-OMD on >= 99% of pairs."""
    for seed in range(20):
        mtx = make_instance(500 + seed, n=60, m=50, density=0.15)
        ref = CFOMDReference(lambda_p=0.01, lambda_n=1e8, tol=TOL).fit(mtx)
        ecf = ECFOMDRecommender(lambda_p=0.01, tol=TOL).fit(mtx)
        u = int(np.argmax(mtx.user_counts))
        alpha, pos, neg, _ = ref.solve(u)
        assert np.allclose(alpha[neg], 1.0 / len(neg), atol=1e-4)
        a, b = ref.score_user(u)[0], ecf.score_user(u)[0]
        candidates = np.setdiff1d(np.arange(mtx.m), pos)
        assert pairwise_agreement(a[candidates], b[candidates]) >= 0.99


def test_engine_builds_every_method(small_instance):
    engine = RecommenderEngine()
    configs = [
        RunConfig(data="x", method=Method.ECF_OMD),
        RunConfig(data="x", method=Method.CF_KOMD, kernel=make_spec("rbf")),
        RunConfig(data="x", method=Method.MSDW, alpha=0.1),
        RunConfig(data="x", method=Method.CFOMD_REF),
    ]
    for config in configs:
        rec = engine.create(config).fit(small_instance)
        assert rec.method_name == config.method.value
        assert len(rec.recommend(0)) == small_instance.m_neg(0)
    assert set(engine.get_available_methods()) == {m.value for m in Method}
    assert engine.create(configs[1]).spec.family == KernelFamily.RBF
