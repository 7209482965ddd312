# core/gram.py
"""
Normalized item vectors, sparse gram matrices and the q vectors.

Item i is represented by x_i = r_i / ||r_i||, the binary rating column scaled
to unit norm. Gram entries exist only for co-rated pairs; absent entries are
exact zeros for reduced kernels.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from core.dataset import InteractionMatrix
from core.exceptions import (
    DegenerateUserError, SizeCapError, UnreachableItemError,
)
from core.kernel_engine import get_kernel, zero_degree_term
from core.utils import GramCache, PerformanceUtils, Stopwatch, TimingLog
from models.schemas import KernelSpec

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-12
BLOCK_ROWS = 512


class ItemVectors:
    """Implicit x_i over the by_item view of a matrix"""

    def __init__(self, mtx: InteractionMatrix):
        self.source = mtx
        counts = mtx.item_counts.astype(np.float64)
        self.norms = np.sqrt(counts)
        self.reachable = counts > 0
        inv = np.zeros_like(self.norms)
        inv[self.reachable] = 1.0 / self.norms[self.reachable]
        # n x m, column i is x_i
        self.X: sp.csc_matrix = sp.csc_matrix(mtx.by_item @ sp.diags(inv))
        self.X.sort_indices()

    @property
    def m(self) -> int:
        return self.source.m

    @property
    def n(self) -> int:
        return self.source.n

    def unreachable_items(self) -> np.ndarray:
        return np.flatnonzero(~self.reachable)

    def check_reachable(self, items: Sequence[int]) -> None:
        items = np.asarray(items, dtype=np.int64)
        bad = items[~self.reachable[items]]
        if bad.size:
            raise UnreachableItemError(bad.tolist())

    def centroid_total(self) -> np.ndarray:
        """sum_i x_i as a dense user-dimension vector"""
        return np.asarray(self.X.sum(axis=1)).ravel()


@dataclass
class GramMatrix:
    """Symmetric kernel matrix over ``items`` (global ids, ascending)"""
    matrix: sp.csr_matrix
    items: np.ndarray
    index: np.ndarray
    m: int
    spec: KernelSpec

    @classmethod
    def build(cls, matrix: sp.csr_matrix, items: np.ndarray, m: int, spec: KernelSpec) -> "GramMatrix":
        index = np.full(m, -1, dtype=np.int64)
        index[items] = np.arange(len(items))
        return cls(matrix=sp.csr_matrix(matrix), items=np.asarray(items, dtype=np.int64),
                   index=index, m=m, spec=spec)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(np.abs(self.matrix.data) > ZERO_TOL))

    def local(self, ids: Sequence[int]) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        loc = self.index[ids]
        if np.any(loc < 0):
            raise UnreachableItemError(ids[loc < 0].tolist())
        return loc

    def submatrix(self, ids: Sequence[int]) -> np.ndarray:
        """Dense principal submatrix K[ids, ids]"""
        loc = self.local(ids)
        return self.matrix[loc][:, loc].toarray()

    def columns_dot(self, ids: Sequence[int], weights: np.ndarray) -> np.ndarray:
        """sum_j weights_j K[:, j] as a catalog-length vector, zero off ``items``"""
        loc = self.local(ids)
        local_scores = self.matrix[:, loc] @ np.asarray(weights, dtype=np.float64)
        out = np.zeros(self.m)
        out[self.items] = np.asarray(local_scores).ravel()
        return out

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.m)
        out[self.items] = np.asarray(self.matrix.sum(axis=1)).ravel()
        return out

    def to_dense(self) -> np.ndarray:
        """Catalog-indexed dense copy, zero rows/columns for missing items"""
        dense = np.zeros((self.m, self.m))
        dense[np.ix_(self.items, self.items)] = self.matrix.toarray()
        return dense

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return {
            "data": self.matrix.data,
            "indices": self.matrix.indices,
            "indptr": self.matrix.indptr,
            "shape": np.asarray(self.matrix.shape, dtype=np.int64),
            "items": self.items,
            "m": np.asarray(self.m, dtype=np.int64),
        }

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray], spec: KernelSpec) -> "GramMatrix":
        shape = tuple(int(s) for s in arrays["shape"])
        matrix = sp.csr_matrix((arrays["data"], arrays["indices"], arrays["indptr"]), shape=shape)
        return cls.build(matrix, arrays["items"], int(arrays["m"]), spec)


@dataclass
class QTilde:
    """Per-item approximation of the negative-mean kernel vector"""
    values: np.ndarray
    spec: KernelSpec


def _linear_block(XT: sp.csr_matrix, X: sp.csc_matrix, rows: np.ndarray) -> sp.csr_matrix:
    return sp.csr_matrix(XT[rows] @ X)


def linear_gram(v: ItemVectors, items: np.ndarray, threads: int = 1) -> sp.csr_matrix:
    """x_i . x_j for co-rated pairs of ``items``, rows split across workers"""
    X = v.X[:, items]
    XT = sp.csr_matrix(X.T)
    blocks = [np.arange(start, min(start + BLOCK_ROWS, len(items)))
              for start in range(0, len(items), BLOCK_ROWS)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda rows: _linear_block(XT, X, rows), blocks))
    else:
        parts = [_linear_block(XT, X, rows) for rows in blocks]
    G = sp.vstack(parts, format="csr") if parts else sp.csr_matrix((0, 0))
    G.sort_indices()
    np.minimum(G.data, 1.0, out=G.data)
    G.setdiag(1.0)
    return G


@PerformanceUtils.measure_execution_time
def compute_gram(
    v: ItemVectors,
    spec: KernelSpec,
    items: Optional[Sequence[int]] = None,
    threads: int = 1,
    dense_cap: int = 2000,
) -> GramMatrix:
    """
    Gram matrix of ``spec`` over ``items`` (every reachable item by default).

    Entry (i, j) is stored iff U_i and U_j intersect, plus the diagonal.
    A non-reduced spec with k0 > 0 has no zeros at all and is only built
    densely up to ``dense_cap`` items.
    """
    if items is None:
        ids = np.flatnonzero(v.reachable)
    else:
        ids = np.unique(np.asarray(items, dtype=np.int64))
        v.check_reachable(ids)

    kernel = get_kernel(spec)
    k0 = zero_degree_term(spec)
    G = linear_gram(v, ids, threads=threads)

    if spec.reduced or k0 == 0.0:
        K = G.copy()
        K.data = np.asarray(kernel.evaluate_reduced(G.data) if spec.reduced else kernel.evaluate(G.data),
                            dtype=np.float64)
    else:
        if len(ids) > dense_cap:
            raise SizeCapError(
                f"{spec.label()} has k0={k0:g} and would need a dense {len(ids)}x{len(ids)} gram "
                f"(cap {dense_cap}); use the reduced kernel")
        dense = np.full((len(ids), len(ids)), k0)
        coo = G.tocoo()
        dense[coo.row, coo.col] = kernel.evaluate(coo.data)
        K = sp.csr_matrix(dense)

    gram = GramMatrix.build(K, ids, v.m, spec)
    logger.debug("gram %s: %d items, %d stored entries", spec.label(), len(ids), K.nnz)
    return gram


def compute_q_tilde(v: ItemVectors, spec: KernelSpec, gram: GramMatrix) -> QTilde:
    """Row mean of the gram over the full catalog of m items"""
    return QTilde(values=gram.row_sums() / float(v.m), spec=spec)


def compute_q_exact(
    v: ItemVectors,
    spec: KernelSpec,
    gram: GramMatrix,
    positives: Sequence[int],
) -> np.ndarray:
    """Mean kernel value against the user's negatives, per catalog item"""
    positives = np.asarray(positives, dtype=np.int64)
    m_neg = v.m - len(positives)
    if m_neg <= 0:
        raise DegenerateUserError("user rated every item; the negative set is empty")
    totals = gram.row_sums()
    if len(positives):
        totals = totals - gram.columns_dot(positives, np.ones(len(positives)))
    return totals / float(m_neg)


def gram_and_q_tilde(
    mtx: InteractionMatrix,
    spec: KernelSpec,
    threads: int = 1,
    dense_cap: int = 2000,
    cache: Optional[GramCache] = None,
    timing: Optional[TimingLog] = None,
) -> Tuple[ItemVectors, GramMatrix, QTilde]:
    """Full-catalog gram plus q-tilde, served from ``cache`` when possible"""
    v = ItemVectors(mtx)
    key = None
    if cache is not None and cache.enabled:
        key = GramCache.make_key(mtx.content_hash(), spec.cache_key())
        arrays = cache.get(key)
        if arrays is not None:
            gram = GramMatrix.from_arrays(arrays, spec)
            return v, gram, QTilde(values=arrays["q_tilde"], spec=spec)

    with Stopwatch() as gram_time:
        gram = compute_gram(v, spec, threads=threads, dense_cap=dense_cap)
    with Stopwatch() as q_time:
        qt = compute_q_tilde(v, spec, gram)
    if timing is not None:
        timing.log_phase("gram", gram_time.elapsed(), kernel=spec.label(), nnz=gram.matrix.nnz)
        timing.log_phase("q_tilde", q_time.elapsed(), kernel=spec.label())
    if key is not None:
        cache.set(key, {**gram.to_arrays(), "q_tilde": qt.values})
    return v, gram, qt


__all__ = [
    'ItemVectors', 'GramMatrix', 'QTilde', 'linear_gram', 'compute_gram',
    'compute_q_tilde', 'compute_q_exact', 'gram_and_q_tilde', 'ZERO_TOL',
]
