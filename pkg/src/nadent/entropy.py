"""Cover-based and separation-based orbit-complexity counters.

Two count families drive every experiment: minimal subcover cardinalities
of joined preimage covers, and maximum-separated / minimum-spanning set
sizes under the orbit-maximum metric. Counts are exact wherever a size cap
allows (partitions are always exact via a linear shortcut); beyond the cap
the result carries certified bounds and an inexact flag.

Threshold comparisons are strict (``> eps`` for separation, ``< eps`` for
spanning) and decided in integer arithmetic, so dyadic ties cannot flip a
count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import caps
from .errors import NotACover, SizeCapExceeded
from ._kernels import max_clique, min_set_cover
from .nads import Nads
from .space import (
    KIND_INTERIOR,
    KIND_LIMIT_ONE,
    KIND_LIMIT_ZERO,
    FiniteSpace,
    as_fraction,
    word_depth_arrays,
)


class OpenCover:
    """Indexed family of point subsets whose union is the whole space."""

    def __init__(self, space: FiniteSpace, masks: np.ndarray, check: bool = True):
        self.space = space
        self.masks = np.ascontiguousarray(masks, dtype=bool)
        if self.masks.ndim != 2 or self.masks.shape[1] != len(space):
            raise ValueError("masks must be (n_elements, n_points)")
        if check and not self.masks.any(axis=0).all():
            missing = int(np.argmin(self.masks.any(axis=0)))
            raise NotACover(f"point {space.labels[missing]!r} is uncovered")

    @staticmethod
    def from_id_sets(space: FiniteSpace, sets: Iterable[Iterable[int]]) -> "OpenCover":
        rows = []
        for s in sets:
            row = np.zeros(len(space), dtype=bool)
            row[list(s)] = True
            rows.append(row)
        return OpenCover(space, np.array(rows, dtype=bool))

    @staticmethod
    def from_label_sets(space: FiniteSpace, sets: Iterable[Iterable]) -> "OpenCover":
        return OpenCover.from_id_sets(
            space, ([space.index(lab) for lab in s] for s in sets)
        )

    def __len__(self) -> int:
        return self.masks.shape[0]

    def element_ids(self, e: int) -> list[int]:
        return [int(i) for i in np.nonzero(self.masks[e])[0]]

    def is_partition(self) -> bool:
        counts = self.masks.sum(axis=0)
        return bool((counts == 1).all())

    def assignment(self) -> np.ndarray | None:
        """Point -> element index when the cover is a partition, else None."""
        if not self.is_partition():
            return None
        return self.masks.argmax(axis=0).astype(np.int64)

    def nonempty_indices(self) -> list[int]:
        return [int(i) for i in np.nonzero(self.masks.any(axis=1))[0]]


def trivial_cover(space: FiniteSpace) -> OpenCover:
    return OpenCover(space, np.ones((1, len(space)), dtype=bool))


def first_symbol_cover(space: FiniteSpace) -> OpenCover:
    """Two-cell partition of a two-limit space by the first word symbol.

    Cell 0 holds the zero limit and all words starting with 0, cell 1 the
    one limit and all words starting with 1.
    """
    if space.meta.get("family") != "x":
        raise ValueError("first_symbol_cover needs a two-limit word/depth space")
    data = word_depth_arrays(space)
    a0 = np.where(
        data.kind == KIND_INTERIOR, (data.word >> (data.L - 1)) & 1, 0
    )
    a0 = np.where(data.kind == KIND_LIMIT_ONE, 1, a0)
    masks = np.stack([a0 == 0, a0 == 1])
    return OpenCover(space, masks)


def stable_word_cover(space: FiniteSpace, n1: int, n2: int) -> OpenCover:
    """Partition of a one-limit space: one deep cell plus cylinder fibers.

    The deep cell collects the limit point and every level beyond ``n1``;
    the remaining cells fix the word symbols at positions 1..n2 for each
    level up to ``n1``. All orbit preimages of this cover eventually
    trivialize, which is what makes the one-limit counts stabilize.
    """
    if space.meta.get("family") != "y":
        raise ValueError("stable_word_cover needs a one-limit word/depth space")
    data = word_depth_arrays(space)
    L = data.L
    if n2 + 1 > L:
        raise ValueError(f"cylinder depth {n2} needs word length >= {n2 + 1}")
    if n1 < 1 or n2 < 1:
        raise ValueError("n1 and n2 must be >= 1")
    deep = (data.kind == KIND_LIMIT_ZERO) | (data.level > n1)
    rows = [deep]
    pat = (data.word >> (L - 1 - n2)) & ((1 << n2) - 1)
    for lev in range(1, n1 + 1):
        at_level = (data.kind == KIND_INTERIOR) & (data.level == lev)
        for p in range(1 << n2):
            rows.append(at_level & (pat == p))
    return OpenCover(space, np.stack(rows), check=True)


def preimage_cover(sys: Nads, cover: OpenCover, j: int) -> OpenCover:
    """Element-wise preimage under the composition of the first j maps."""
    if j < 0:
        raise ValueError("j must be >= 0")
    if j == 0:
        return cover
    row = sys.orbit_rows(j + 1)[j]
    return OpenCover(sys.space, cover.masks[:, row], check=False)


def _dedupe(masks: np.ndarray) -> np.ndarray:
    seen: set[bytes] = set()
    keep: list[int] = []
    packed = np.packbits(masks, axis=1)
    for i in range(masks.shape[0]):
        key = packed[i].tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return masks[keep]


def join(covers: Sequence[OpenCover], element_cap: int | None = None) -> OpenCover:
    """All nonempty intersections picking one element from each cover.

    Partitions join via per-point signatures (linear); the general case is
    a depth-first product with empty-branch pruning and deduplication.
    """
    covers = list(covers)
    if not covers:
        raise ValueError("need at least one cover")
    space = covers[0].space
    if any(c.space is not space for c in covers[1:]):
        raise ValueError("covers must share one space")
    if len(covers) == 1:
        return covers[0]
    cap = caps.JOIN_ELEMENT_CAP if element_cap is None else element_cap

    assignments = [c.assignment() for c in covers]
    if all(a is not None for a in assignments):
        sig = np.stack(assignments, axis=1)
        _, inverse = np.unique(sig, axis=0, return_inverse=True)
        n_cells = int(inverse.max()) + 1
        masks = np.zeros((n_cells, len(space)), dtype=bool)
        masks[inverse, np.arange(len(space))] = True
        return OpenCover(space, masks, check=False)

    out: list[np.ndarray] = []

    def descend(level: int, current: np.ndarray):
        if len(out) > cap:
            raise SizeCapExceeded(f"join exceeds {cap} elements")
        if level == len(covers):
            out.append(current)
            return
        for row in covers[level].masks:
            nxt = current & row
            if nxt.any():
                descend(level + 1, nxt)

    for row in covers[0].masks:
        if row.any():
            descend(1, row.copy())
    return OpenCover(space, _dedupe(np.array(out)), check=False)


def joined_preimages(sys: Nads, cover: OpenCover, horizon: int) -> OpenCover:
    """The join of the preimage covers for steps 0..horizon-1."""
    pres = [preimage_cover(sys, cover, j) for j in range(horizon)]
    return join(pres)


# ---------------------------------------------------------------------------
# minimal subcovers


@dataclass
class CoverCount:
    """Minimal-subcover cardinality, exact or bracketed.

    ``count`` equals the exact minimum when ``exact``; otherwise it is the
    certified upper bound and ``lower`` the certified lower bound.
    """

    count: int
    exact: bool
    lower: int
    upper: int
    method: str

    def __int__(self) -> int:
        return self.count


def _greedy_cover(masks: np.ndarray) -> list[int]:
    n = masks.shape[1]
    uncovered = np.ones(n, dtype=bool)
    chosen: list[int] = []
    while uncovered.any():
        gains = (masks & uncovered).sum(axis=1)
        e = int(np.argmax(gains))
        if gains[e] == 0:
            raise NotACover("union does not reach every point")
        chosen.append(e)
        uncovered &= ~masks[e]
    return chosen


def _independent_points_bound(masks: np.ndarray) -> int:
    """Points no element covers twice give a lower bound on any subcover."""
    n = masks.shape[1]
    blocked = np.zeros(n, dtype=bool)
    freq = masks.sum(axis=0)
    count = 0
    for p in np.argsort(freq, kind="stable"):
        if blocked[p]:
            continue
        count += 1
        covering = masks[:, p]
        blocked |= masks[covering].any(axis=0)
    return count


def minimal_subcover(
    cover: OpenCover,
    exact_cap: int | None = None,
    node_budget: int | None = None,
) -> tuple[CoverCount, list[int]]:
    """Exact minimal subcover when tractable, else certified bounds.

    Returns the count record and the selected element indices (a witness
    subcover achieving ``count``).
    """
    masks = cover.masks
    if not masks.any(axis=0).all():
        missing = int(np.argmin(masks.any(axis=0)))
        raise NotACover(f"point {cover.space.labels[missing]!r} is uncovered")
    nonempty = cover.nonempty_indices()
    sub = masks[nonempty]

    counts_per_point = sub.sum(axis=0)
    if (counts_per_point == 1).all():
        return (
            CoverCount(len(nonempty), True, len(nonempty), len(nonempty), "partition"),
            nonempty,
        )

    n_points = masks.shape[1]
    cap = caps.COVER_EXACT_CAP if exact_cap is None else exact_cap
    if n_points <= cap:
        size, sel = min_set_cover(sub, node_budget)
        chosen = [nonempty[i] for i in sel]
        return CoverCount(size, True, size, size, "branch_and_bound"), chosen

    greedy = _greedy_cover(sub)
    upper = len(greedy)
    lower = _independent_points_bound(sub)
    return (
        CoverCount(upper, False, lower, upper, "greedy+bound"),
        [nonempty[i] for i in greedy],
    )


def minimal_subcover_count(
    cover: OpenCover,
    exact_cap: int | None = None,
    node_budget: int | None = None,
) -> CoverCount:
    return minimal_subcover(cover, exact_cap, node_budget)[0]


# ---------------------------------------------------------------------------
# separated / spanning counters


@dataclass
class SeparationResult:
    count: int
    witness: list[int]
    exact: bool
    mode: str
    horizon: int
    eps: Fraction


def _complement_components(adj: np.ndarray) -> list[list[int]]:
    """Connected components of the complement of the adjacency matrix."""
    m = adj.shape[0]
    non = ~adj
    np.fill_diagonal(non, False)
    seen = np.zeros(m, dtype=bool)
    comps = []
    for start in range(m):
        if seen[start]:
            continue
        frontier = np.zeros(m, dtype=bool)
        frontier[start] = True
        comp = np.zeros(m, dtype=bool)
        while frontier.any():
            comp |= frontier
            reach = non[frontier].any(axis=0)
            frontier = reach & ~comp
        seen |= comp
        comps.append([int(i) for i in np.nonzero(comp)[0]])
    return comps


def _bowen_scaled_matrix(
    sys: Nads, n: int, subset: Sequence[int] | None, dense_cap: int | None
) -> tuple[np.ndarray, list[int]]:
    if subset is not None:
        ids = list(subset)
        return sys.subset_bowen_scaled(n, ids), ids
    return sys.bowen_matrix(n, dense_cap), list(range(len(sys.space)))


def max_separated(
    sys: Nads,
    n: int,
    eps,
    mode: str = "exact",
    subset: Sequence[int] | None = None,
    exact_cap: int | None = None,
    dense_cap: int | None = None,
    node_budget: int | None = None,
) -> SeparationResult:
    """Largest (or greedily maximal) set with pairwise orbit distance > eps.

    Exact mode solves maximum clique on the separation graph and is capped;
    greedy mode returns a maximal set, i.e. a certified lower bound.
    """
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    mat, ids = _bowen_scaled_matrix(sys, n, subset, dense_cap)
    m = len(ids)
    if m == 1:
        return SeparationResult(1, [ids[0]], True, "exact", n, eps)
    t = sys.space.gt_threshold(eps)
    adj = mat > t

    offdiag = adj | np.eye(m, dtype=bool)
    if offdiag.all():
        return SeparationResult(m, list(ids), True, mode, n, eps)
    if not adj.any():
        return SeparationResult(1, [ids[0]], True, mode, n, eps)

    if mode == "exact":
        cap = caps.SEPARATED_EXACT_CAP if exact_cap is None else exact_cap
        if m > cap:
            raise SizeCapExceeded(f"exact separated search on {m} points, cap {cap}")
        # Points in different components of the non-separation graph are
        # mutually separated, so the maximum decomposes across components.
        count = 0
        members: list[int] = []
        for comp in _complement_components(adj):
            if len(comp) == 1:
                count += 1
                members.append(comp[0])
                continue
            sub = adj[np.ix_(comp, comp)]
            size, local = max_clique(sub, node_budget)
            count += size
            members.extend(comp[v] for v in local)
        return SeparationResult(
            count, sorted(ids[v] for v in members), True, "exact", n, eps
        )
    if mode == "greedy":
        chosen: list[int] = []
        chosen_mask = np.zeros(m, dtype=bool)
        for v in range(m):
            if not (chosen_mask & ~adj[v]).any():
                chosen.append(v)
                chosen_mask[v] = True
        return SeparationResult(
            len(chosen), [ids[v] for v in chosen], False, "greedy", n, eps
        )
    raise ValueError(f"unknown mode {mode!r}")


def verify_separated(sys: Nads, n: int, eps, ids: Sequence[int]) -> bool:
    """Check that the given points are pairwise further than eps at horizon n."""
    eps = as_fraction(eps)
    t = sys.space.gt_threshold(eps)
    mat = sys.subset_bowen_scaled(n, list(ids))
    m = len(ids)
    return all(mat[a, b] > t for a in range(m) for b in range(a + 1, m))


@dataclass
class SpanningResult:
    count: int
    centers: list[int]
    exact: bool
    mode: str
    horizon: int
    eps: Fraction


def min_spanning(
    sys: Nads,
    n: int,
    eps,
    mode: str = "exact",
    exact_cap: int | None = None,
    dense_cap: int | None = None,
    node_budget: int | None = None,
) -> SpanningResult:
    """Smallest set of centers whose strict eps-orbit-balls cover the space."""
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    mat = sys.bowen_matrix(n, dense_cap)
    m = mat.shape[0]
    t = sys.space.lt_threshold(eps)
    balls = mat < t  # row y = points strictly within eps of center y
    if balls.all():
        return SpanningResult(1, [0], True, mode, n, eps)

    if mode == "exact":
        cap = caps.COVER_EXACT_CAP if exact_cap is None else exact_cap
        if m > cap:
            raise SizeCapExceeded(f"exact spanning search on {m} points, cap {cap}")
        size, sel = min_set_cover(balls, node_budget)
        return SpanningResult(size, sel, True, "exact", n, eps)
    if mode == "greedy":
        sel = _greedy_cover(balls)
        return SpanningResult(len(sel), sel, False, "greedy", n, eps)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# growth tables


@dataclass
class GrowthRow:
    n: int
    count: int
    log_count: float
    exact: bool


@dataclass
class GrowthTable:
    """Log-count series with two slope estimators standing in for the
    asymptotic growth rate (which finite data cannot certify)."""

    rows: list[GrowthRow]
    slope_fit: float | None
    slope_tail: float | None

    def to_csv_text(self) -> str:
        lines = ["n,count,log_count,exact_flag"]
        for r in self.rows:
            lines.append(f"{r.n},{r.count},{r.log_count!r},{str(r.exact).lower()}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {"n": r.n, "count": r.count, "log_count": r.log_count, "exact": r.exact}
                for r in self.rows
            ],
            "slope_fit": self.slope_fit,
            "slope_tail": self.slope_tail,
        }


def growth_table(entries: Sequence[tuple[int, object]], tail_window: int = 3) -> GrowthTable:
    """Build a growth table from (horizon, count) pairs.

    Counts may be ints or any result object with ``count`` and ``exact``
    attributes. ``slope_fit`` is the least-squares slope over the last half
    of the horizons; ``slope_tail`` a windowed difference quotient.
    """
    rows: list[GrowthRow] = []
    last_n = None
    for n, c in entries:
        if last_n is not None and n <= last_n:
            raise ValueError("horizons must be strictly increasing")
        last_n = n
        if isinstance(c, int):
            count, exact = c, True
        else:
            count, exact = int(c.count), bool(c.exact)
        if count < 1:
            raise ValueError("counts must be >= 1")
        rows.append(GrowthRow(n, count, math.log(count), exact))

    slope_fit = None
    half = rows[len(rows) // 2 :]
    if len(half) >= 2:
        xs = np.array([r.n for r in half], dtype=float)
        ys = np.array([r.log_count for r in half], dtype=float)
        xm, ym = xs.mean(), ys.mean()
        denom = float(((xs - xm) ** 2).sum())
        slope_fit = float(((xs - xm) * (ys - ym)).sum() / denom)

    slope_tail = None
    if len(rows) >= 2:
        w = min(tail_window, len(rows) - 1)
        a, b = rows[-1 - w], rows[-1]
        slope_tail = (b.log_count - a.log_count) / (b.n - a.n)

    return GrowthTable(rows, slope_fit, slope_tail)


def cover_growth(
    sys: Nads,
    cover: OpenCover,
    horizons: Sequence[int],
    exact_cap: int | None = None,
    tail_window: int = 3,
) -> GrowthTable:
    """Minimal-subcover counts of the joined preimage covers per horizon."""
    entries = []
    for m in horizons:
        joined = joined_preimages(sys, cover, m)
        entries.append((m, minimal_subcover_count(joined, exact_cap)))
    return growth_table(entries, tail_window)


def separated_growth(
    sys: Nads,
    horizons: Sequence[int],
    eps,
    mode: str = "exact",
    subset: Sequence[int] | None = None,
    exact_cap: int | None = None,
    dense_cap: int | None = None,
    tail_window: int = 3,
) -> GrowthTable:
    entries = []
    for n in horizons:
        entries.append(
            (n, max_separated(sys, n, eps, mode, subset, exact_cap, dense_cap))
        )
    return growth_table(entries, tail_window)
