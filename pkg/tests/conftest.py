# tests/conftest.py
"""
Test configuration and fixtures for the kernel CF-OMD recommender
"""

import os
import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp
from click.testing import CliRunner

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.dataset import InteractionMatrix
from core.kernel_engine import make_spec


def random_matrix(rng: np.random.Generator, n: int, m: int, density: float,
                  min_per_user: int = 1, full_items: bool = True) -> InteractionMatrix:
    """
    Random binary matrix where every user has ``min_per_user`` ratings and,
    with ``full_items``, every item has at least one rating.
    """
    dense = rng.random((n, m)) < density
    for u in range(n):
        if dense[u].sum() < min_per_user:
            dense[u, rng.choice(m, size=min_per_user, replace=False)] = True
        if dense[u].all():
            dense[u, rng.integers(m)] = False
    if full_items:
        for i in np.flatnonzero(dense.sum(axis=0) == 0):
            dense[rng.integers(n), i] = True
    return InteractionMatrix(sp.csr_matrix(dense.astype(np.float64)))


def make_instance(seed: int, n: int = 30, m: int = 20, density: float = 0.25) -> InteractionMatrix:
    """Small random instance where no user rated everything and every item is reachable"""
    rng = np.random.default_rng(seed)
    while True:
        mtx = random_matrix(rng, n, m, density, min_per_user=2)
        if np.all(mtx.user_counts < m) and np.all(mtx.item_counts > 0):
            return mtx


def random_psd(rng: np.random.Generator, d: int, rank: int = None) -> np.ndarray:
    A = rng.standard_normal((d, rank or d))
    return A @ A.T / d


@pytest.fixture
def rng():
    """Seeded generator so property loops are reproducible."""
    return np.random.default_rng(20240607)


@pytest.fixture
def tiny_matrix():
    """
    4 users x 3 items:

        u0: i0 i1
        u1: i0
        u2: i1 i2
        u3: i2
    """
    dense = np.array([
        [1, 1, 0],
        [1, 0, 0],
        [0, 1, 1],
        [0, 0, 1],
    ], dtype=float)
    return InteractionMatrix.from_dense(dense)


@pytest.fixture
def disjoint_matrix():
    """Three items rated by disjoint user sets."""
    return InteractionMatrix.from_dense(np.array([
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, 0, 0],
    ], dtype=float))


@pytest.fixture
def small_instance():
    return make_instance(7)


@pytest.fixture
def linear_spec():
    return make_spec("linear")


@pytest.fixture
def ratings_file(tmp_path):
    """Tab-separated ratings with a threshold-relevant third column."""
    rng = np.random.default_rng(3)
    lines = ["# user\titem\trating"]
    for u in range(40):
        items = rng.choice(25, size=int(rng.integers(6, 12)), replace=False)
        for i in items:
            lines.append(f"u{u}\ti{i}\t{int(rng.integers(1, 6))}")
    path = tmp_path / "ratings.tsv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def runner(monkeypatch, tmp_path):
    """CLI runner isolated from the caller's KOMD_* environment and .env."""
    for key in list(os.environ):
        if key.startswith("KOMD_"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)
    return CliRunner()


def dataset_path(env_var: str) -> Path:
    """Path of an external dataset or skip the test"""
    value = os.environ.get(env_var)
    if not value or not Path(value).exists():
        pytest.skip(f"set {env_var} to run this reproduction test")
    return Path(value)
