"""Kernel backend selection.

The hot loops (pairwise orbit-distance matrices, triangle sweeps and the
exact branch-and-bound searches) exist twice: a Cython extension and a
pure-Python implementation with identical semantics.  The compiled backend
is used when the extension built successfully; set ``NADENT_PURE_KERNELS=1``
to force the fallback (the benchmark suite compares the two).
"""

from __future__ import annotations

import os

import numpy as np

from . import _pure

_impl = _pure
BACKEND = "pure"

if not os.environ.get("NADENT_PURE_KERNELS"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass


def backend_name() -> str:
    return BACKEND


def _as_i64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


def triangle_violation(dists) -> tuple[int, int, int] | None:
    """First triple (x, y, z) with d(x,z) > d(x,y) + d(y,z), or None."""
    return _impl.triangle_violation(_as_i64(dists))


def pairwise_max_gather(base, orbits) -> np.ndarray:
    """M[a,b] = max over rows r of base[r[a], r[b]].

    ``orbits`` holds one row of point indices per orbit step; the result is
    the pairwise orbit-maximum (Bowen) scaled-distance matrix.
    """
    return _impl.pairwise_max_gather(_as_i64(base), _as_i64(orbits))


def max_clique(adjacency, node_budget: int | None = None) -> tuple[int, list[int]]:
    """Exact maximum clique of a boolean adjacency matrix."""
    adj = np.ascontiguousarray(adjacency, dtype=bool)
    if adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency matrix must be square")
    return _impl.max_clique(adj, 0 if node_budget is None else int(node_budget))


def min_set_cover(sets, node_budget: int | None = None) -> tuple[int, list[int]]:
    """Exact minimum subfamily of boolean rows covering all columns.

    Raises ValueError when the union of the rows misses a column.
    """
    mat = np.ascontiguousarray(sets, dtype=bool)
    return _impl.min_set_cover(mat, 0 if node_budget is None else int(node_budget))
