# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend: same semantics as ``_pure``, C speed.

Bitsets are packed little-endian into 64-bit words; the searches follow
the pure implementations step for step (same branching rules, same node
budget tick points) so the two backends return equal counts.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

from ..errors import SizeCapExceeded

cnp.import_array()

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil
    int __builtin_popcountll(unsigned long long) nogil


def triangle_violation(cnp.int64_t[:, ::1] d):
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i, j, k
    cdef int64_t dik
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            for j in range(n):
                if d[i, j] > dik + d[k, j]:
                    return (i, k, j)
    return None


def pairwise_max_gather(cnp.int64_t[:, ::1] base, cnp.int64_t[:, ::1] orbits):
    cdef Py_ssize_t h = orbits.shape[0]
    cdef Py_ssize_t n = orbits.shape[1]
    if h < 1:
        raise ValueError("need at least one orbit row")
    out = np.empty((n, n), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    cdef Py_ssize_t a, b, j
    cdef int64_t best, v
    with nogil:
        for a in range(n):
            for b in range(a, n):
                best = base[orbits[0, a], orbits[0, b]]
                for j in range(1, h):
                    v = base[orbits[j, a], orbits[j, b]]
                    if v > best:
                        best = v
                o[a, b] = best
                o[b, a] = best
    return out


cdef inline Py_ssize_t _first_bit(uint64_t[:, ::1] rows, Py_ssize_t row, Py_ssize_t words) nogil:
    cdef Py_ssize_t w
    for w in range(words):
        if rows[row, w]:
            return (w << 6) + __builtin_ctzll(rows[row, w])
    return -1


def _pack_bool_rows(mat):
    """Boolean (m, n) matrix -> little-endian uint64 words (m, ceil(n/64))."""
    m, n = mat.shape
    words = max(1, (n + 63) >> 6)
    packed = np.packbits(mat, axis=1, bitorder="little")
    padded = np.zeros((m, words * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return np.ascontiguousarray(padded.view("<u8"))


cdef class _CliqueSolver:
    cdef uint64_t[:, ::1] nbr
    cdef uint64_t[:, ::1] pstack
    cdef uint64_t[:, ::1] scratch
    cdef int[:, ::1] order_v
    cdef int[:, ::1] order_c
    cdef int[::1] rstack
    cdef Py_ssize_t n, words
    cdef int best_size
    cdef long nodes, budget
    cdef object best

    def __init__(self, nbr_arr, int seed_size, seed, long budget):
        cdef Py_ssize_t n = nbr_arr.shape[0]
        self.n = n
        self.words = nbr_arr.shape[1]
        self.nbr = nbr_arr
        self.pstack = np.zeros((n + 2, self.words), dtype=np.uint64)
        self.scratch = np.zeros((2 * (n + 2), self.words), dtype=np.uint64)
        self.order_v = np.zeros((n + 2, max(n, 1)), dtype=np.int32)
        self.order_c = np.zeros((n + 2, max(n, 1)), dtype=np.int32)
        self.rstack = np.zeros(max(n, 1), dtype=np.int32)
        self.best_size = seed_size
        self.best = list(seed)
        self.nodes = 0
        self.budget = budget

    cdef int _color_order(self, Py_ssize_t depth) nogil:
        cdef Py_ssize_t w, v
        cdef int cnt = 0, color = 0
        cdef Py_ssize_t u_row = 2 * depth
        cdef Py_ssize_t q_row = 2 * depth + 1
        for w in range(self.words):
            self.scratch[u_row, w] = self.pstack[depth, w]
        while True:
            v = _first_bit(self.scratch, u_row, self.words)
            if v < 0:
                break
            color += 1
            for w in range(self.words):
                self.scratch[q_row, w] = self.scratch[u_row, w]
            while True:
                v = _first_bit(self.scratch, q_row, self.words)
                if v < 0:
                    break
                self.order_v[depth, cnt] = <int> v
                self.order_c[depth, cnt] = color
                cnt += 1
                self.scratch[u_row, v >> 6] &= ~((<uint64_t> 1) << (v & 63))
                self.scratch[q_row, v >> 6] &= ~((<uint64_t> 1) << (v & 63))
                for w in range(self.words):
                    self.scratch[q_row, w] &= ~self.nbr[v, w]
        return cnt

    cdef int _expand(self, Py_ssize_t depth, int rsize):
        cdef int cnt, idx, v, c
        cdef Py_ssize_t w
        cdef uint64_t x, nonempty
        self.nodes += 1
        if self.budget and self.nodes > self.budget:
            return 1
        cnt = self._color_order(depth)
        for idx in range(cnt - 1, -1, -1):
            v = self.order_v[depth, idx]
            c = self.order_c[depth, idx]
            if rsize + c <= self.best_size:
                return 0
            self.rstack[rsize] = v
            nonempty = 0
            for w in range(self.words):
                x = self.pstack[depth, w] & self.nbr[v, w]
                self.pstack[depth + 1, w] = x
                nonempty |= x
            if nonempty:
                if self._expand(depth + 1, rsize + 1):
                    return 1
            elif rsize + 1 > self.best_size:
                self.best_size = rsize + 1
                self.best = [self.rstack[i] for i in range(rsize + 1)]
            self.pstack[depth, v >> 6] &= ~((<uint64_t> 1) << (v & 63))
        return 0

    def solve(self):
        cdef Py_ssize_t w, v
        for w in range(self.words):
            self.pstack[0, w] = 0
        for v in range(self.n):
            self.pstack[0, v >> 6] |= (<uint64_t> 1) << (v & 63)
        if self._expand(0, 0):
            raise SizeCapExceeded(f"search exceeded node budget {self.budget}")
        return self.best_size, sorted(self.best)


def max_clique(adj, long node_budget=0):
    cdef Py_ssize_t n = adj.shape[0]
    if n == 0:
        return 0, []
    mat = np.array(adj, dtype=bool)
    np.fill_diagonal(mat, False)
    nbr_arr = _pack_bool_rows(mat)

    # greedy seed: max-degree-first extension (same rule as the fallback)
    degrees = mat.sum(axis=1)
    order = sorted(range(n), key=lambda t: -int(degrees[t]))
    clique = []
    for v in order:
        if all(mat[v, u] for u in clique):
            clique.append(v)
    solver = _CliqueSolver(nbr_arr, len(clique), clique, node_budget)
    return solver.solve()


cdef class _CoverSolver:
    cdef uint64_t[:, ::1] rows       # filtered set rows (words)
    cdef uint64_t[:, ::1] reach      # per point: union of covering rows
    cdef uint64_t[:, ::1] ustack     # uncovered per depth
    cdef uint64_t[:, ::1] scratch
    cdef int[::1] cp_start
    cdef int[::1] cp_items
    cdef int[::1] chosen
    cdef Py_ssize_t m, n_points, words
    cdef int best_size
    cdef long nodes, budget
    cdef object best

    def __init__(self, rows_arr, reach_arr, cp_start, cp_items, best_sel, long budget):
        self.rows = rows_arr
        self.reach = reach_arr
        self.m = rows_arr.shape[0]
        self.words = rows_arr.shape[1]
        self.cp_start = cp_start
        self.cp_items = cp_items
        self.best = list(best_sel)
        self.best_size = len(best_sel)
        self.ustack = np.zeros((self.m + 2, self.words), dtype=np.uint64)
        self.scratch = np.zeros((self.m + 2, self.words), dtype=np.uint64)
        self.chosen = np.zeros(max(self.m, 1), dtype=np.int32)
        self.nodes = 0
        self.budget = budget

    cdef int _lower_bound(self, Py_ssize_t depth) nogil:
        cdef int count = 0
        cdef Py_ssize_t w, p
        for w in range(self.words):
            self.scratch[depth, w] = self.ustack[depth, w]
        while True:
            p = _first_bit(self.scratch, depth, self.words)
            if p < 0:
                break
            count += 1
            for w in range(self.words):
                self.scratch[depth, w] &= ~self.reach[p, w]
        return count

    cdef inline int _gain(self, Py_ssize_t r, Py_ssize_t depth) nogil:
        cdef int g = 0
        cdef Py_ssize_t w
        for w in range(self.words):
            g += __builtin_popcountll(self.rows[r, w] & self.ustack[depth, w])
        return g

    cdef int _solve(self, Py_ssize_t depth, int nchosen):
        cdef Py_ssize_t w, p, q, i, r
        cdef int bp_len, best_len
        cdef uint64_t any_left = 0
        for w in range(self.words):
            any_left |= self.ustack[depth, w]
        if not any_left:
            if nchosen < self.best_size:
                self.best_size = nchosen
                self.best = [self.chosen[i] for i in range(nchosen)]
            return 0
        if nchosen + 1 >= self.best_size:
            return 0
        if nchosen + self._lower_bound(depth) >= self.best_size:
            return 0
        self.nodes += 1
        if self.budget and self.nodes > self.budget:
            return 1

        # branch on the uncovered point with the fewest active candidate rows
        cdef int bcount = -1
        cdef Py_ssize_t bpoint = -1
        for w in range(self.words):
            self.scratch[depth, w] = self.ustack[depth, w]
        while True:
            p = _first_bit(self.scratch, depth, self.words)
            if p < 0:
                break
            self.scratch[depth, p >> 6] &= ~((<uint64_t> 1) << (p & 63))
            bp_len = 0
            for i in range(self.cp_start[p], self.cp_start[p + 1]):
                if self._gain(self.cp_items[i], depth) > 0:
                    bp_len += 1
            if bcount < 0 or bp_len < bcount:
                bcount = bp_len
                bpoint = p
                if bp_len == 1:
                    break

        cands = []
        for i in range(self.cp_start[bpoint], self.cp_start[bpoint + 1]):
            r = self.cp_items[i]
            g = self._gain(r, depth)
            if g > 0:
                cands.append((-g, r))
        cands.sort()
        for _, r in cands:
            self.chosen[nchosen] = <int> r
            for w in range(self.words):
                self.ustack[depth + 1, w] = self.ustack[depth, w] & ~self.rows[r, w]
            if self._solve(depth + 1, nchosen + 1):
                return 1
        return 0

    def solve(self, full):
        cdef Py_ssize_t w
        for w in range(self.words):
            self.ustack[0, w] = full[w]
        if self._solve(0, 0):
            raise SizeCapExceeded(f"search exceeded node budget {self.budget}")
        return self.best_size, sorted(self.best)


def min_set_cover(mat, long node_budget=0):
    mat = np.array(mat, dtype=bool)
    m, n = mat.shape
    if not mat.any(axis=0).all():
        raise ValueError("rows do not cover all columns")

    nonempty = mat.any(axis=1)
    # drop dominated rows (subset of an earlier or larger row)
    keep = []
    for i in range(m):
        if not nonempty[i]:
            continue
        dominated = False
        for j in range(m):
            if j == i or not nonempty[j]:
                continue
            if not (mat[i] & ~mat[j]).any():
                if (mat[i] != mat[j]).any() or j < i:
                    dominated = True
                    break
        if not dominated:
            keep.append(i)
    sub = mat[keep]
    mk = sub.shape[0]

    rows_arr = _pack_bool_rows(sub)
    words = rows_arr.shape[1]

    cp_lists = [[] for _ in range(n)]
    for r in range(mk):
        for p in np.nonzero(sub[r])[0]:
            cp_lists[int(p)].append(r)
    cp_start = np.zeros(n + 1, dtype=np.int32)
    items = []
    for p in range(n):
        cp_start[p + 1] = cp_start[p] + len(cp_lists[p])
        items.extend(cp_lists[p])
    cp_items = np.array(items if items else [0], dtype=np.int32)

    reach_bool = np.zeros((n, n), dtype=bool)
    for p in range(n):
        for r in cp_lists[p]:
            reach_bool[p] |= sub[r]
    reach_arr = _pack_bool_rows(reach_bool)

    # greedy upper bound (largest gain, lowest index on ties)
    uncovered = np.ones(n, dtype=bool)
    greedy_sel = []
    while uncovered.any():
        gains = (sub & uncovered).sum(axis=1)
        e = int(np.argmax(gains))
        greedy_sel.append(e)
        uncovered &= ~sub[e]

    full_words = _pack_bool_rows(np.ones((1, n), dtype=bool))[0]
    solver = _CoverSolver(
        rows_arr, reach_arr, cp_start, cp_items, greedy_sel, node_budget
    )
    size, sel = solver.solve(full_words)
    return size, sorted(keep[r] for r in sel)
