import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nadent._kernels import (
    backend_name,
    max_clique,
    min_set_cover,
    pairwise_max_gather,
    triangle_violation,
)
from nadent._kernels import _pure
from nadent.errors import SizeCapExceeded

try:
    from nadent._kernels import _ckernels

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

BACKENDS = [("pure", _pure)] + ([("compiled", _ckernels)] if HAVE_COMPILED else [])


def random_graph(n, p, seed):
    rng = random.Random(seed)
    mat = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                mat[i, j] = mat[j, i] = True
    return mat


def brute_clique(mat):
    n = mat.shape[0]
    best = 0
    for mask in range(1, 1 << n):
        nodes = [v for v in range(n) if mask >> v & 1]
        if len(nodes) <= best:
            continue
        if all(mat[a, b] for i, a in enumerate(nodes) for b in nodes[i + 1 :]):
            best = len(nodes)
    return best


def brute_cover(mat):
    m, n = mat.shape
    best = m + 1
    for mask in range(1, 1 << m):
        rows = [r for r in range(m) if mask >> r & 1]
        if len(rows) >= best:
            continue
        if mat[rows].any(axis=0).all():
            best = len(rows)
    return best


class TestMaxClique:
    @pytest.mark.parametrize("name,impl", BACKENDS)
    @pytest.mark.parametrize("seed", range(12))
    def test_matches_brute_force(self, name, impl, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 12)
        mat = random_graph(n, rng.choice([0.25, 0.5, 0.75]), seed * 7 + 1)
        size, members = impl.max_clique(mat, 0)
        assert size == brute_clique(mat)
        assert len(members) == size
        assert all(
            mat[a, b] for i, a in enumerate(members) for b in members[i + 1 :]
        )

    def test_backends_agree(self):
        if not HAVE_COMPILED:
            pytest.skip("compiled backend unavailable")
        for seed in range(25):
            mat = random_graph(20, 0.5, seed)
            assert _pure.max_clique(mat, 0)[0] == _ckernels.max_clique(mat, 0)[0]

    def test_budget_exceeded_raises(self):
        mat = random_graph(40, 0.5, 3)
        with pytest.raises(SizeCapExceeded):
            max_clique(mat, node_budget=1)

    def test_empty_and_complete(self):
        n = 9
        empty = np.zeros((n, n), dtype=bool)
        assert max_clique(empty)[0] == 1
        full = ~np.eye(n, dtype=bool)
        assert max_clique(full)[0] == n


class TestMinSetCover:
    @pytest.mark.parametrize("name,impl", BACKENDS)
    @pytest.mark.parametrize("seed", range(12))
    def test_matches_brute_force(self, name, impl, seed):
        rng = random.Random(seed + 100)
        m, n = rng.randint(1, 9), rng.randint(1, 10)
        mat = np.zeros((m, n), dtype=bool)
        for i in range(m):
            for j in range(n):
                mat[i, j] = rng.random() < 0.45
        mat[rng.randrange(m)] |= ~mat.any(axis=0)
        size, sel = impl.min_set_cover(mat, 0)
        assert size == brute_cover(mat)
        assert mat[sel].any(axis=0).all()
        assert len(sel) == size

    def test_uncoverable_raises(self):
        mat = np.zeros((2, 3), dtype=bool)
        mat[0, 0] = mat[1, 1] = True
        with pytest.raises(ValueError):
            min_set_cover(mat)


class TestArrayKernels:
    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_gather_matches_numpy(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 24))
        h = int(rng.integers(1, 5))
        base = rng.integers(0, 50, size=(n, n)).astype(np.int64)
        base = np.maximum(base, base.T)
        orbits = rng.integers(0, n, size=(h, n)).astype(np.int64)
        got = pairwise_max_gather(base, orbits)
        ref = np.max(
            [base[np.ix_(row, row)] for row in orbits], axis=0
        )
        assert np.array_equal(got, ref)

    def test_triangle_detects_known_violation(self):
        d = np.array(
            [[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=np.int64
        )
        viol = triangle_violation(d)
        assert viol is not None
        x, y, z = viol
        assert d[x, z] > d[x, y] + d[y, z]

    def test_triangle_passes_valid_metric(self):
        rng = np.random.default_rng(5)
        w = rng.integers(1, 9, size=(7, 7)).astype(np.int64)
        w = np.minimum(w, w.T)
        np.fill_diagonal(w, 0)
        for k in range(7):
            w = np.minimum(w, w[:, k : k + 1] + w[k : k + 1, :])
        assert triangle_violation(w) is None

    def test_backend_name_reported(self):
        assert backend_name() in ("pure", "compiled")
