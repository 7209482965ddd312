# core/dataset.py
"""
Interaction ingestion, the binary rating matrix and the fold protocol.

Users are rows and items are columns. Dense ids are assigned in first-seen
order so that reloading a file reproduces the same ids.
"""

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import scipy.sparse as sp

from core.exceptions import ConfigurationError, EmptyDatasetError, ParseError
from core.utils import HashUtils, PerformanceUtils
from models.schemas import ALWAYS_TRAIN, DatasetStats, FoldPlan

logger = logging.getLogger(__name__)

DELIMITERS = {"tab": "\t", "comma": ",", "space": None, "whitespace": None}


@dataclass
class InteractionSet:
    """Deduplicated (user, item) pairs with label <-> dense id bijections"""
    records: List[Tuple[str, str]]
    user_labels: List[str]
    item_labels: List[str]
    user_index: Dict[str, int] = field(default_factory=dict)
    item_index: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, str]]) -> "InteractionSet":
        records: List[Tuple[str, str]] = []
        seen = set()
        user_index: Dict[str, int] = {}
        item_index: Dict[str, int] = {}
        for user, item in pairs:
            user, item = str(user), str(item)
            if (user, item) in seen:
                continue
            seen.add((user, item))
            records.append((user, item))
            user_index.setdefault(user, len(user_index))
            item_index.setdefault(item, len(item_index))
        return cls(
            records=records,
            user_labels=list(user_index),
            item_labels=list(item_index),
            user_index=user_index,
            item_index=item_index,
        )

    @property
    def n(self) -> int:
        return len(self.user_labels)

    @property
    def m(self) -> int:
        return len(self.item_labels)

    def __len__(self) -> int:
        return len(self.records)


class InteractionMatrix:
    """
    Binary n x m rating matrix held both by user (CSR) and by item (CSC).

    Instances are treated as immutable once built; both views describe the
    same nonzeros and every row/column is sorted.
    """

    def __init__(
        self,
        by_user: sp.csr_matrix,
        user_labels: Optional[Sequence[str]] = None,
        item_labels: Optional[Sequence[str]] = None,
    ):
        by_user = sp.csr_matrix(by_user, dtype=np.float64)
        by_user.sum_duplicates()
        by_user.eliminate_zeros()
        by_user.data[:] = 1.0
        by_user.sort_indices()
        self.by_user: sp.csr_matrix = by_user
        self.by_item: sp.csc_matrix = by_user.tocsc()
        self.by_item.sort_indices()

        n, m = by_user.shape
        self.user_labels = list(user_labels) if user_labels is not None else [str(u) for u in range(n)]
        self.item_labels = list(item_labels) if item_labels is not None else [str(i) for i in range(m)]
        if len(self.user_labels) != n or len(self.item_labels) != m:
            raise ValueError("label lists do not match the matrix shape")

        self._user_counts = np.diff(self.by_user.indptr)
        self._item_counts = np.diff(self.by_item.indptr)
        self._hash: Optional[str] = None

    @classmethod
    def from_arrays(
        cls,
        users: Sequence[int],
        items: Sequence[int],
        n: int,
        m: int,
        user_labels: Optional[Sequence[str]] = None,
        item_labels: Optional[Sequence[str]] = None,
    ) -> "InteractionMatrix":
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        coo = sp.coo_matrix((np.ones(len(users)), (users, items)), shape=(n, m))
        return cls(coo.tocsr(), user_labels, item_labels)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "InteractionMatrix":
        return cls(sp.csr_matrix((np.asarray(dense) != 0).astype(np.float64)))

    @property
    def n(self) -> int:
        return self.by_user.shape[0]

    @property
    def m(self) -> int:
        return self.by_user.shape[1]

    @property
    def nnz(self) -> int:
        return int(self.by_user.nnz)

    @property
    def density(self) -> float:
        return self.nnz / float(self.n * self.m)

    def items_of(self, user: int) -> np.ndarray:
        """I_u: sorted item ids rated by the user"""
        start, end = self.by_user.indptr[user], self.by_user.indptr[user + 1]
        return self.by_user.indices[start:end]

    def users_of(self, item: int) -> np.ndarray:
        """U_i: sorted user ids who rated the item"""
        start, end = self.by_item.indptr[item], self.by_item.indptr[item + 1]
        return self.by_item.indices[start:end]

    def m_pos(self, user: int) -> int:
        return int(self._user_counts[user])

    def m_neg(self, user: int) -> int:
        return self.m - self.m_pos(user)

    @property
    def user_counts(self) -> np.ndarray:
        return self._user_counts

    @property
    def item_counts(self) -> np.ndarray:
        return self._item_counts

    def content_hash(self) -> str:
        if self._hash is None:
            self._hash = HashUtils.sparse_matrix_hash(self.by_user)
        return self._hash

    def stats(self) -> DatasetStats:
        return DatasetStats(n_users=self.n, n_items=self.m, n_ratings=self.nnz, density=self.density)

    def to_dense(self) -> np.ndarray:
        return self.by_user.toarray()

    def __repr__(self) -> str:
        return f"InteractionMatrix(n={self.n}, m={self.m}, nnz={self.nnz})"


def _resolve_delimiter(delimiter: Optional[str], sample: str) -> Optional[str]:
    """None means 'split on any whitespace'"""
    if delimiter is None or delimiter == "auto":
        if "\t" in sample:
            return "\t"
        if "::" in sample:
            return "::"
        if "," in sample:
            return ","
        if ";" in sample:
            return ";"
        return None
    if delimiter in DELIMITERS:
        return DELIMITERS[delimiter]
    if delimiter == "\\t":
        return "\t"
    return delimiter


def _is_skipped(line: str, comment_prefixes: str) -> bool:
    line = line.strip()
    return not line or bool(comment_prefixes and line[0] in comment_prefixes)


def _sniff(path: Path, comment_prefixes: str, sample_bytes: int = 65536) -> str:
    """First data line of the file, or '' when the head holds none"""
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        head = f.read(sample_bytes).splitlines()
    return next((line for line in head if not _is_skipped(line, comment_prefixes)), "")


def _read_frame(path: Path, sep: Optional[str], width: int) -> pd.DataFrame:
    """
    Raw string frame, one row per physical line (blank lines included) so
    that row i is line i + 1. Columns past ``width`` are dropped; missing
    ones come back empty.
    """
    if sep is None:
        pd_sep = r"\s+"
    elif len(sep) == 1:
        pd_sep = sep
    else:
        pd_sep = re.escape(sep)
    cols = list(range(width))
    try:
        frame = pd.read_csv(
            path, sep=pd_sep, header=None, names=cols, usecols=cols, index_col=False,
            dtype=str, engine="python", quoting=csv.QUOTE_NONE, skip_blank_lines=False,
            keep_default_na=False, encoding="utf-8", encoding_errors="replace",
        )
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=cols, dtype=str)
    return frame.fillna("").apply(lambda col: col.str.strip())


def load_interactions(
    path: Union[str, Path],
    delimiter: Optional[str] = "auto",
    threshold: Optional[float] = None,
    user_col: int = 0,
    item_col: int = 1,
    rating_col: Optional[int] = 2,
    skip_header: bool = False,
    comment_prefixes: str = "#%",
) -> InteractionSet:
    """
    Read delimiter-separated (user, item[, rating]) lines.

    Pairs whose rating is below ``threshold`` are dropped; without a rating
    column every pair is kept. Duplicate pairs collapse to one interaction.
    """
    path = Path(path)
    sep = _resolve_delimiter(delimiter, _sniff(path, comment_prefixes))
    needed = [user_col, item_col] + ([rating_col] if rating_col is not None else [])
    frame = _read_frame(path, sep, max(needed) + 1)
    line_nos = frame.index.to_numpy() + 1

    first = frame[0]
    data = ~((frame == "").all(axis=1) | first.str[:1].isin(list(comment_prefixes)))
    if skip_header and data.any():
        data.iloc[int(np.argmax(data.to_numpy()))] = False
    frame, line_nos = frame[data.to_numpy()], line_nos[data.to_numpy()]

    min_cols = max(user_col, item_col) + 1
    broken = ((frame[user_col] == "") | (frame[item_col] == "")).to_numpy()
    if broken.any():
        at = int(np.argmax(broken))
        present = int((frame.iloc[at] != "").sum())
        raise ParseError(f"expected at least {min_cols} columns, got {present}",
                         line_no=int(line_nos[at]), path=str(path))

    dropped = 0
    if threshold is not None and rating_col is not None:
        raw = frame[rating_col]
        ratings = pd.to_numeric(raw, errors="coerce")
        bad = ((raw != "") & ratings.isna()).to_numpy()
        if bad.any():
            at = int(np.argmax(bad))
            raise ParseError(f"rating {raw.iloc[at]!r} is not a number",
                             line_no=int(line_nos[at]), path=str(path))
        keep = ((raw == "") | (ratings >= threshold)).to_numpy()
        dropped = int((~keep).sum())
        frame = frame[keep]

    pairs = list(zip(frame[user_col].tolist(), frame[item_col].tolist()))
    interactions = InteractionSet.from_pairs(pairs)
    if len(interactions) == 0:
        raise EmptyDatasetError(f"no interactions retained from {path}")

    logger.info("loaded %s: n=%d m=%d |R|=%d (%d below threshold, %d duplicates)",
                path.name, interactions.n, interactions.m, len(interactions),
                dropped, len(pairs) - len(interactions))
    return interactions


def build_matrix(s: InteractionSet) -> InteractionMatrix:
    """Binary sparse matrix with sorted per-user and per-item adjacency"""
    if len(s) == 0:
        raise EmptyDatasetError("cannot build a matrix from an empty interaction set")
    users = np.fromiter((s.user_index[u] for u, _ in s.records), dtype=np.int64, count=len(s))
    items = np.fromiter((s.item_index[i] for _, i in s.records), dtype=np.int64, count=len(s))
    return InteractionMatrix.from_arrays(users, items, s.n, s.m, s.user_labels, s.item_labels)


@PerformanceUtils.measure_execution_time
def make_fold_plan(
    mtx: InteractionMatrix,
    k: int = 5,
    seed: int = 42,
    min_ratings: int = 5,
    config: Optional[dict] = None,
) -> FoldPlan:
    """
    Randomly split eligible users into k folds of near-equal size and pick,
    per eligible user, floor(|I_u| / 2) held-out items uniformly at random.

    Users with fewer than ``min_ratings`` ratings are ALWAYS_TRAIN.
    """
    if k < 2:
        raise ConfigurationError(f"need at least 2 folds, got {k}")

    eligible = np.flatnonzero(mtx.user_counts >= min_ratings)
    if k > len(eligible):
        raise ConfigurationError(
            f"{k} folds requested but only {len(eligible)} users have >= {min_ratings} ratings")

    rng = np.random.default_rng(seed)
    user_fold = np.full(mtx.n, ALWAYS_TRAIN, dtype=np.int64)
    order = rng.permutation(eligible)
    user_fold[order] = np.arange(len(order)) % k

    heldout: List[List[int]] = [[] for _ in range(mtx.n)]
    for u in eligible:
        items = mtx.items_of(u)
        size = len(items) // 2
        chosen = rng.choice(items, size=size, replace=False)
        heldout[u] = sorted(int(i) for i in chosen)

    plan = FoldPlan(
        k=k,
        seed=seed,
        n_users=mtx.n,
        n_items=mtx.m,
        min_ratings=min_ratings,
        dataset_hash=mtx.content_hash(),
        user_fold=[int(f) for f in user_fold],
        heldout=heldout,
        config=config or {},
    )
    logger.info("fold plan: k=%d seed=%d eligible=%d always-train=%d sizes=%s",
                k, seed, len(eligible), mtx.n - len(eligible), plan.fold_sizes())
    return plan


def apply_fold(
    mtx: InteractionMatrix,
    plan: FoldPlan,
    fold: int,
) -> Tuple[InteractionMatrix, Dict[int, np.ndarray]]:
    """
    Training matrix for ``fold`` and the held-out items of its users.

    Users outside the fold keep all their ratings; fold users keep the
    complement of their held-out half.
    """
    if not 0 <= fold < plan.k:
        raise ConfigurationError(f"fold {fold} outside [0, {plan.k})")
    if plan.n_users != mtx.n or plan.n_items != mtx.m:
        raise ConfigurationError("fold plan was built for a different matrix shape")

    keep = np.ones(mtx.nnz, dtype=bool)
    test: Dict[int, np.ndarray] = {}
    indptr, indices = mtx.by_user.indptr, mtx.by_user.indices
    for u in plan.fold_users(fold):
        held = np.asarray(plan.heldout[u], dtype=np.int64)
        if held.size == 0:
            continue
        start, end = indptr[u], indptr[u + 1]
        mask = np.isin(indices[start:end], held)
        if mask.sum() != held.size:
            raise ConfigurationError(f"fold plan holds out items user {u} never rated")
        keep[start:end] &= ~mask
        test[u] = held

    data = np.ones(int(keep.sum()))
    row_of = np.repeat(np.arange(mtx.n), np.diff(indptr))
    train = sp.csr_matrix((data, (row_of[keep], indices[keep])), shape=(mtx.n, mtx.m))
    train_mtx = InteractionMatrix(train, mtx.user_labels, mtx.item_labels)

    logger.info("fold %d: train |R|=%d, %d test users, %d held-out ratings",
                fold, train_mtx.nnz, len(test), sum(len(v) for v in test.values()))
    return train_mtx, test


def read_matrix(
    path: Union[str, Path],
    delimiter: Optional[str] = "auto",
    threshold: Optional[float] = None,
    skip_header: bool = False,
) -> InteractionMatrix:
    """load_interactions followed by build_matrix"""
    return build_matrix(load_interactions(path, delimiter=delimiter, threshold=threshold,
                                          skip_header=skip_header))


__all__ = [
    'InteractionSet', 'InteractionMatrix', 'FoldPlan', 'ALWAYS_TRAIN',
    'load_interactions', 'build_matrix', 'make_fold_plan', 'apply_fold', 'read_matrix',
]
