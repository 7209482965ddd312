# tests/test_dataset.py
"""
Test cases for ingestion, the rating matrix and the fold protocol
"""

import numpy as np
import pytest

from conftest import dataset_path, make_instance
from core.dataset import (
    InteractionSet, apply_fold, build_matrix, load_interactions, make_fold_plan, read_matrix,
)
from core.exceptions import ConfigurationError, EmptyDatasetError, ParseError
from models.schemas import ALWAYS_TRAIN, FoldPlan


def write(tmp_path, text, name="data.txt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_tab_separated_with_threshold(tmp_path):
    """Ratings below the threshold are dropped."""
    path = write(tmp_path, "a\tx\t5\na\ty\t2\nb\tx\t4\n")
    s = load_interactions(path, threshold=4)

    assert s.records == [("a", "x"), ("b", "x")]
    assert s.user_labels == ["a", "b"]
    assert s.item_labels == ["x"]


def test_load_autodetects_comma_and_whitespace(tmp_path):
    """Delimiter detection covers commas and runs of spaces."""
    comma = load_interactions(write(tmp_path, "1,10,3\n2,11,4\n", "c.csv"))
    spaces = load_interactions(write(tmp_path, "1   10  3\n2 11 4\n", "s.txt"))

    assert comma.records == [("1", "10"), ("2", "11")]
    assert spaces.records == comma.records


def test_load_skips_comments_blank_lines_and_duplicates(tmp_path):
    """Comments and blank lines are ignored; duplicate pairs collapse."""
    path = write(tmp_path, "% header\n# note\n\nu1 i1\nu1 i1\nu2 i1\n")
    s = load_interactions(path)

    assert len(s) == 2
    assert s.n == 2 and s.m == 1


def test_load_without_rating_column_keeps_everything(tmp_path):
    path = write(tmp_path, "u1\ti1\nu2\ti2\n")
    s = load_interactions(path, threshold=4)
    assert len(s) == 2


def test_parse_error_reports_line_number(tmp_path):
    """Malformed lines raise with their line number."""
    path = write(tmp_path, "u1\ti1\t5\nlonely\n")
    with pytest.raises(ParseError) as exc:
        load_interactions(path)
    assert exc.value.line_no == 2
    assert ":2:" in str(exc.value)


def test_load_autodetects_double_colon(tmp_path):
    """MovieLens-style files need no explicit format."""
    path = write(tmp_path, "1::1193::5::978300760\n1::661::3::978302109\n2::1193::2::978298413\n")
    s = load_interactions(path, threshold=3)
    assert s.records == [("1", "1193"), ("1", "661")]


def test_extra_columns_are_ignored(tmp_path):
    path = write(tmp_path, "u1,i1,4,2009-01-01,x\nu2,i2,5\n", "wide.csv")
    assert load_interactions(path, threshold=4).records == [("u1", "i1"), ("u2", "i2")]


def test_header_after_leading_comment_is_skipped(tmp_path):
    """The header is the first line that is neither blank nor a comment."""
    path = write(tmp_path, "# exported ratings\n\nuser\titem\trating\nu1\ti1\t5\nu2\ti1\t1\n")
    s = load_interactions(path, threshold=3, skip_header=True)
    assert s.records == [("u1", "i1")]


def test_parse_error_line_number_counts_skipped_lines(tmp_path):
    path = write(tmp_path, "% note\n\nu1 i1 5\n# more\nu2 i2 x\n")
    with pytest.raises(ParseError) as exc:
        load_interactions(path, threshold=3)
    assert exc.value.line_no == 5


def test_bad_rating_is_a_parse_error(tmp_path):
    path = write(tmp_path, "u1\ti1\tfive\n")
    with pytest.raises(ParseError):
        load_interactions(path, threshold=3)


def test_empty_after_threshold(tmp_path):
    """Nothing surviving the threshold is an empty dataset."""
    path = write(tmp_path, "u1\ti1\t1\nu2\ti2\t2\n")
    with pytest.raises(EmptyDatasetError):
        load_interactions(path, threshold=4)


def test_ids_follow_first_seen_order(tmp_path):
    """Dense ids are stable across reloads."""
    path = write(tmp_path, "z a\ny b\nz b\n")
    first = build_matrix(load_interactions(path))
    second = read_matrix(path)

    assert first.user_labels == ["z", "y"]
    assert first.item_labels == ["a", "b"]
    assert first.content_hash() == second.content_hash()


def test_matrix_dual_views_agree(small_instance):
    """by_user and by_item describe the same nonzeros."""
    mtx = small_instance
    for u in range(mtx.n):
        for i in mtx.items_of(u):
            assert u in mtx.users_of(i)
    assert mtx.user_counts.sum() == mtx.item_counts.sum() == mtx.nnz
    assert mtx.m_pos(0) + mtx.m_neg(0) == mtx.m


def test_build_matrix_rejects_empty():
    with pytest.raises(EmptyDatasetError):
        build_matrix(InteractionSet.from_pairs([]))


def test_fold_plan_is_deterministic_and_replayable():
    """Same seed gives an identical plan, which round-trips through JSON."""
    mtx = make_instance(11, n=60, m=30, density=0.3)
    plan = make_fold_plan(mtx, k=5, seed=3)
    again = make_fold_plan(mtx, k=5, seed=3)

    assert plan.to_json() == again.to_json()
    assert FoldPlan.model_validate_json(plan.to_json()).plan_hash() == plan.plan_hash()
    assert make_fold_plan(mtx, k=5, seed=4).plan_hash() != plan.plan_hash()


def test_fold_plan_balances_eligible_users():
    """Folds differ in size by at most one; light users always train."""
    mtx = make_instance(5, n=53, m=25, density=0.2)
    plan = make_fold_plan(mtx, k=5, seed=1, min_ratings=5)

    sizes = plan.fold_sizes()
    assert max(sizes) - min(sizes) <= 1
    for u, fold in enumerate(plan.user_fold):
        if mtx.m_pos(u) < 5:
            assert fold == ALWAYS_TRAIN
            assert plan.heldout[u] == []
        else:
            assert 0 <= fold < 5
            assert len(plan.heldout[u]) == mtx.m_pos(u) // 2
            assert set(plan.heldout[u]) <= set(mtx.items_of(u).tolist())


def test_fold_plan_too_many_folds():
    mtx = make_instance(2, n=6, m=10, density=0.6)
    with pytest.raises(ConfigurationError):
        make_fold_plan(mtx, k=50, seed=0)


def test_apply_fold_removes_exactly_heldout():
    """Training keeps everything except the fold users' held-out halves."""
    mtx = make_instance(13, n=50, m=30, density=0.3)
    plan = make_fold_plan(mtx, k=5, seed=9)
    train, test = apply_fold(mtx, plan, 2)

    assert sorted(test) == sorted(u for u in plan.fold_users(2) if plan.heldout[u])
    removed = sum(len(v) for v in test.values())
    assert train.nnz == mtx.nnz - removed
    for u, held in test.items():
        kept = set(train.items_of(u).tolist())
        assert kept.isdisjoint(held.tolist())
        assert kept | set(held.tolist()) == set(mtx.items_of(u).tolist())
    other = next(u for u in range(mtx.n) if plan.user_fold[u] != 2)
    assert np.array_equal(train.items_of(other), mtx.items_of(other))


def test_apply_fold_rejects_foreign_plan():
    plan = make_fold_plan(make_instance(1, n=40, m=20), k=2, seed=0)
    with pytest.raises(ConfigurationError):
        apply_fold(make_instance(2, n=41, m=20), plan, 0)


@pytest.mark.slow
@pytest.mark.integration
def test_filmtrust_statistics():
    """FilmTrust has 1508 users, 2071 items and 35496 ratings."""
    mtx = read_matrix(dataset_path("KOMD_TEST_FILMTRUST"))
    assert (mtx.n, mtx.m, mtx.nnz) == (1508, 2071, 35496)
