"""Pure-Python kernel backend.

Array plumbing uses numpy; the combinatorial searches run on Python-int
bitsets, which keeps them exact and reasonably quick at the size caps the
library enforces for exact modes.
"""

from __future__ import annotations

import numpy as np

from ..errors import SizeCapExceeded


def triangle_violation(d: np.ndarray):
    n = d.shape[0]
    for k in range(n):
        through = d[:, k : k + 1] + d[k : k + 1, :]
        bad = np.argwhere(d > through)
        if bad.size:
            i, j = int(bad[0][0]), int(bad[0][1])
            return i, k, j
    return None


def pairwise_max_gather(base: np.ndarray, orbits: np.ndarray) -> np.ndarray:
    out: np.ndarray | None = None
    for row in orbits:
        g = base[np.ix_(row, row)]
        if out is None:
            out = g.copy()
        else:
            np.maximum(out, g, out=out)
    if out is None:
        raise ValueError("need at least one orbit row")
    return out


def _rows_to_bitsets(mat: np.ndarray) -> list[int]:
    packed = np.packbits(mat, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


class _Budget:
    __slots__ = ("nodes", "limit")

    def __init__(self, limit: int):
        self.nodes = 0
        self.limit = limit

    def tick(self):
        self.nodes += 1
        if self.limit and self.nodes > self.limit:
            raise SizeCapExceeded(f"search exceeded node budget {self.limit}")


def _greedy_clique(nbr: list[int], n: int) -> list[int]:
    order = sorted(range(n), key=lambda v: -bin(nbr[v]).count("1"))
    clique: list[int] = []
    mask = (1 << n) - 1
    for v in order:
        if all(nbr[v] >> u & 1 for u in clique):
            clique.append(v)
            mask &= nbr[v]
            if not mask:
                break
    return clique


def _color_order(p: int, nbr: list[int]) -> list[tuple[int, int]]:
    """Greedy coloring of the candidate set; returns (vertex, color) pairs
    in nondecreasing color order (the color is a clique-size upper bound)."""
    order: list[tuple[int, int]] = []
    color = 0
    uncolored = p
    while uncolored:
        color += 1
        q = uncolored
        while q:
            v = (q & -q).bit_length() - 1
            bit = 1 << v
            order.append((v, color))
            uncolored &= ~bit
            q &= ~bit & ~nbr[v]
    return order


def max_clique(adj: np.ndarray, node_budget: int = 0) -> tuple[int, list[int]]:
    n = adj.shape[0]
    if n == 0:
        return 0, []
    nbr = _rows_to_bitsets(adj)
    for v in range(n):
        nbr[v] &= ~(1 << v)  # no self-loops
    best = _greedy_clique(nbr, n)
    best_size = len(best)
    budget = _Budget(node_budget)

    def expand(r: list[int], p: int):
        nonlocal best, best_size
        budget.tick()
        order = _color_order(p, nbr)
        for v, color in reversed(order):
            if len(r) + color <= best_size:
                return
            bit = 1 << v
            r.append(v)
            sub = p & nbr[v]
            if sub:
                expand(r, sub)
            elif len(r) > best_size:
                best = list(r)
                best_size = len(r)
            r.pop()
            p &= ~bit

    expand([], (1 << n) - 1)
    return best_size, sorted(best)


def min_set_cover(mat: np.ndarray, node_budget: int = 0) -> tuple[int, list[int]]:
    m, n = mat.shape
    full = (1 << n) - 1
    sets = _rows_to_bitsets(mat)
    union = 0
    for s in sets:
        union |= s
    if union != full:
        raise ValueError("rows do not cover all columns")

    # Drop dominated rows (subsets of an earlier or larger row).
    keep: list[int] = []
    for i in range(m):
        si = sets[i]
        if si == 0:
            continue
        dominated = False
        for j in range(m):
            if j == i:
                continue
            sj = sets[j]
            if si & ~sj == 0 and (si != sj or j < i):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    idx = keep
    rows = [sets[i] for i in idx]

    covers_point: list[list[int]] = [[] for _ in range(n)]
    for r, s in enumerate(rows):
        t = s
        while t:
            p = (t & -t).bit_length() - 1
            covers_point[p].append(r)
            t &= t - 1
    reach = [0] * n
    for p in range(n):
        u = 0
        for r in covers_point[p]:
            u |= rows[r]
        reach[p] = u

    def greedy() -> list[int]:
        sel: list[int] = []
        uncovered = full
        while uncovered:
            r = max(range(len(rows)), key=lambda t: (bin(rows[t] & uncovered).count("1"), -t))
            sel.append(r)
            uncovered &= ~rows[r]
        return sel

    def lower_bound(uncovered: int) -> int:
        count = 0
        u = uncovered
        while u:
            p = (u & -u).bit_length() - 1
            count += 1
            u &= ~reach[p]
        return count

    best_sel = greedy()
    best_size = len(best_sel)
    budget = _Budget(node_budget)

    def solve(uncovered: int, chosen: list[int]):
        nonlocal best_sel, best_size
        if not uncovered:
            if len(chosen) < best_size:
                best_size = len(chosen)
                best_sel = list(chosen)
            return
        if len(chosen) + 1 >= best_size:
            return
        if len(chosen) + lower_bound(uncovered) >= best_size:
            return
        budget.tick()
        # Branch on the uncovered point with the fewest candidate rows.
        bp, bcands = -1, None
        u = uncovered
        while u:
            p = (u & -u).bit_length() - 1
            cands = [r for r in covers_point[p] if rows[r] & uncovered]
            if bcands is None or len(cands) < len(bcands):
                bp, bcands = p, cands
                if len(cands) == 1:
                    break
            u &= u - 1
        assert bcands is not None
        for r in sorted(bcands, key=lambda t: -bin(rows[t] & uncovered).count("1")):
            chosen.append(r)
            solve(uncovered & ~rows[r], chosen)
            chosen.pop()

    solve(full, [])
    return best_size, sorted(idx[r] for r in best_sel)
