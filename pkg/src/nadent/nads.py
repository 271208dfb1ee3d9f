"""Nonautonomous systems on finite spaces.

A system is a space plus a rule giving the n-th map; points are integer
ids into the space. Orbit rows under the time-1 composition are memoized
because every entropy computation reuses them.

The flagship example is the depth-gated shift on the word/depth spaces:
the n-th map sends ``(word, level)`` to ``(shifted word, level + 1)``
whenever ``level <= n`` and fixes everything else, so level-1 points get
shifted at every step while deep points wait for their index to come up.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import caps
from .errors import SizeCapExceeded, TruncationExceeded
from ._kernels import pairwise_max_gather
from .space import (
    FiniteSpace,
    SpacePoint,
    build_example_x,
    build_example_y,
    build_shift_space,
    random_metric_space,
)


@dataclass(frozen=True)
class MapSequence:
    """Rule for the n-th map of a system, acting on point ids.

    ``vector_rule`` is an optional array version used to build orbit rows
    quickly; it must agree with ``rule`` pointwise.
    """

    rule: Callable[[int, int], int]
    eventual_period_hint: int | None = None
    vector_rule: Callable[[int, np.ndarray], np.ndarray] | None = None


class Nads:
    """A finite space together with a sequence of self-maps."""

    def __init__(self, space: FiniteSpace, maps: MapSequence, name: str = ""):
        self.space = space
        self.maps = maps
        self.name = name or space.meta.get("builder", "system")
        self._orbit_rows: list[np.ndarray] = []
        self._bowen_state: tuple[int, np.ndarray] | None = None

    def __repr__(self) -> str:
        return f"Nads({self.name}, {len(self.space)} points)"

    def step(self, n: int, x: int) -> int:
        return self.maps.rule(n, x)

    def compose(self, i: int, n: int, x: int) -> int:
        """Apply maps i, i+1, ..., i+n-1 in order; n = 0 is the identity."""
        if i < 1 or n < 0:
            raise ValueError("need start index >= 1 and length >= 0")
        if i == 1 and n < len(self._orbit_rows):
            return int(self._orbit_rows[n][x])
        for k in range(i, i + n):
            x = self.maps.rule(k, x)
        return x

    def orbit_rows(self, horizon: int) -> np.ndarray:
        """Rows j = 0..horizon-1 of the time-1 orbit: row[j][x] = image of x
        under the composition of the first j maps."""
        if not self._orbit_rows:
            self._orbit_rows.append(np.arange(len(self.space), dtype=np.int64))
        while len(self._orbit_rows) < horizon:
            j = len(self._orbit_rows)  # building row j = map_j applied to row j-1
            prev = self._orbit_rows[-1]
            if self.maps.vector_rule is not None:
                nxt = np.asarray(self.maps.vector_rule(j, prev), dtype=np.int64)
            else:
                rule = self.maps.rule
                nxt = np.fromiter(
                    (rule(j, int(x)) for x in prev), dtype=np.int64, count=len(prev)
                )
            self._orbit_rows.append(nxt)
        return np.vstack(self._orbit_rows[:horizon])

    # -- Bowen (orbit-maximum) metrics -------------------------------------

    def bowen_scaled(self, n: int, x: int, y: int) -> int:
        if n < 1:
            raise ValueError("horizon must be >= 1")
        rows = self.orbit_rows(n)
        sp = self.space
        return max(sp.scaled(int(rows[j][x]), int(rows[j][y])) for j in range(n))

    def bowen_distance(self, n: int, x: int, y: int) -> Fraction:
        return Fraction(self.bowen_scaled(n, x, y), self.space.denominator)

    def bowen_matrix(self, n: int, cap: int | None = None) -> np.ndarray:
        """Dense scaled orbit-maximum distance matrix at horizon n.

        The largest computed horizon is cached and extended incrementally,
        so ascending sweeps cost one gather per new orbit step.
        """
        base = self.space.dense_scaled(cap)
        rows = self.orbit_rows(n)
        if self._bowen_state is not None:
            h, mat = self._bowen_state
            if h == n:
                return mat
            if h < n:
                out = np.maximum(mat, pairwise_max_gather(base, rows[h:n]))
                self._bowen_state = (n, out)
                return out
        out = pairwise_max_gather(base, rows)
        if self._bowen_state is None or self._bowen_state[0] < n:
            self._bowen_state = (n, out)
        return out

    def subset_bowen_scaled(self, n: int, ids: Sequence[int]) -> np.ndarray:
        """Pairwise scaled Bowen distances restricted to the given points."""
        rows = self.orbit_rows(n)
        sp = self.space
        k = len(ids)
        out = np.zeros((k, k), dtype=np.int64)
        for a in range(k):
            for b in range(a + 1, k):
                v = max(
                    sp.scaled(int(rows[j][ids[a]]), int(rows[j][ids[b]]))
                    for j in range(n)
                )
                out[a, b] = v
                out[b, a] = v
        return out


def compose(sys: Nads, i: int, n: int, x: int) -> int:
    return sys.compose(i, n, x)


def bowen_distance(sys: Nads, n: int, x: int, y: int) -> Fraction:
    return sys.bowen_distance(n, x, y)


# ---------------------------------------------------------------------------
# products


def _tuple_coords(ids: np.ndarray, n: int, k: int) -> list[np.ndarray]:
    return [(ids // n ** (k - 1 - i)) % n for i in range(k)]


def product_system(sys: Nads, k: int, size_cap: int | None = None) -> Nads:
    """k-fold product with the coordinate-maximum metric and diagonal maps."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(sys.space)
    cap = caps.PRODUCT_SIZE_CAP if size_cap is None else size_cap
    if n**k > cap:
        raise SizeCapExceeded(f"product has {n ** k} points, cap {cap}")
    base = sys.space
    total = n**k
    labels = []
    for t in range(total):
        coords = []
        rest = t
        for i in range(k):
            coords.append(base.labels[rest // n ** (k - 1 - i) % n])
            rest %= n ** (k - 1 - i)
        labels.append(tuple(coords))

    def scaled_fn(a: int, b: int) -> int:
        best = 0
        for i in range(k):
            p = n ** (k - 1 - i)
            v = base.scaled((a // p) % n, (b // p) % n)
            if v > best:
                best = v
        return best

    def dense_builder() -> np.ndarray:
        bm = base.dense_scaled()
        ids = np.arange(total, dtype=np.int64)
        out = None
        for ci in _tuple_coords(ids, n, k):
            g = bm[np.ix_(ci, ci)]
            out = g.copy() if out is None else np.maximum(out, g, out=out)
        return out

    meta = {key: base.meta[key] for key in ("word_length", "level_cap") if key in base.meta}
    pspace = FiniteSpace(
        labels,
        base.denominator,
        scaled_fn,
        int(base.diameter * base.denominator),
        meta={"builder": "product", "k": k, "base": base.meta.get("builder"), **meta},
        dense_builder=dense_builder,
    )

    powers = [n ** (k - 1 - i) for i in range(k)]

    def rule(step: int, t: int) -> int:
        out = 0
        for p in powers:
            out += sys.maps.rule(step, (t // p) % n) * p
        return out

    vector = None
    if sys.maps.vector_rule is not None:
        base_vec = sys.maps.vector_rule

        def vector(step: int, ts: np.ndarray) -> np.ndarray:
            out = np.zeros_like(ts)
            for p in powers:
                out += base_vec(step, (ts // p) % n) * p
            return out

    maps = MapSequence(rule, sys.maps.eventual_period_hint, vector)
    return Nads(pspace, maps, name=f"{sys.name}^{k}")


# ---------------------------------------------------------------------------
# depth-gated shift systems on the structured spaces


def example_f(n: int, x: SpacePoint, level_cap: int | None = None) -> SpacePoint:
    """n-th map on two-limit points: shift-and-sink when ``level <= n``.

    Raises TruncationExceeded when the image level would pass ``level_cap``.
    """
    if x.kind != "interior":
        return x
    if x.level <= n:
        if level_cap is not None and x.level + 1 > level_cap:
            raise TruncationExceeded(
                f"map {n} needs level {x.level + 1} > cap {level_cap}"
            )
        return SpacePoint.interior(x.word.shift(), x.level + 1)
    return x


def example_g(n: int, y: SpacePoint, level_cap: int | None = None) -> SpacePoint:
    """Restriction of the same rule to one-limit points."""
    if y.kind == "limit_one":
        raise ValueError("one-limit spaces have no limit_one point")
    return example_f(n, y, level_cap)


def example_factor(x: SpacePoint) -> SpacePoint:
    """Factor map gluing the two limits: limit_one goes to limit_zero."""
    if x.kind == "limit_one":
        return SpacePoint.limit_zero()
    return x


def _word_depth_maps(space: FiniteSpace, n_limits: int) -> MapSequence:
    L = space.meta["word_length"]
    n_lev = space.meta["level_cap"]
    mask = (1 << L) - 1

    def rule(n: int, x: int) -> int:
        if x < n_limits:
            return x
        t = x - n_limits
        w, lev = divmod(t, n_lev)
        lev += 1
        if lev > n:
            return x
        if lev + 1 > n_lev:
            raise TruncationExceeded(f"map {n} needs level {lev + 1} > cap {n_lev}")
        return n_limits + ((w << 1) & mask) * n_lev + lev

    def vector(n: int, xs: np.ndarray) -> np.ndarray:
        t = xs - n_limits
        w = t // n_lev
        lev = t % n_lev + 1
        moving = (xs >= n_limits) & (lev <= n)
        if np.any(moving & (lev + 1 > n_lev)):
            raise TruncationExceeded(f"map {n} needs level {n_lev + 1} > cap {n_lev}")
        shifted = n_limits + ((w << 1) & mask) * n_lev + lev
        return np.where(moving, shifted, xs)

    return MapSequence(rule, eventual_period_hint=None, vector_rule=vector)


def example_x_system(L: int, n_lev: int, validate: str = "auto") -> Nads:
    space = build_example_x(L, n_lev, validate)
    return Nads(space, _word_depth_maps(space, 2), name="example_X")


def example_y_system(L: int, n_lev: int, validate: str = "auto") -> Nads:
    space = build_example_y(L, n_lev, validate)
    return Nads(space, _word_depth_maps(space, 1), name="example_Y")


def full_shift_system(L: int, validate: str = "auto") -> Nads:
    """Constant sequence: every map is the word shift (autonomous check case)."""
    space = build_shift_space(L, validate)
    mask = (1 << L) - 1

    def rule(n: int, x: int) -> int:
        return (x << 1) & mask

    def vector(n: int, xs: np.ndarray) -> np.ndarray:
        return (xs << 1) & mask

    return Nads(space, MapSequence(rule, 1, vector), name="full_shift_constant")


def random_system(n_points: int, seed: int, period: int | None = None) -> Nads:
    """Random space with a periodically repeating random map table."""
    rng = random.Random(seed)
    space = random_metric_space(n_points, seed)
    per = period or rng.randint(1, 3)
    tables = [
        [rng.randrange(n_points) for _ in range(n_points)] for _ in range(per)
    ]

    def rule(n: int, x: int) -> int:
        return tables[(n - 1) % per][x]

    arr = [np.array(t, dtype=np.int64) for t in tables]

    def vector(n: int, xs: np.ndarray) -> np.ndarray:
        return arr[(n - 1) % per][xs]

    return Nads(space, MapSequence(rule, per, vector), name=f"random_maps({seed})")


def identity_system(space: FiniteSpace) -> Nads:
    def rule(n: int, x: int) -> int:
        return x

    return Nads(
        space,
        MapSequence(rule, 1, lambda n, xs: xs),
        name="identity",
    )


# ---------------------------------------------------------------------------
# factor maps


@dataclass(frozen=True)
class FactorMap:
    """Equivariant surjection candidate between two systems (checked lazily)."""

    domain: Nads
    codomain: Nads
    map_ids: tuple[int, ...]

    def apply(self, x: int) -> int:
        return self.map_ids[x]


@dataclass
class FactorReport:
    surjective: bool
    equivariant_to: int
    first_violation: tuple | None
    max_fiber: int
    fiber_sizes: dict[int, int] = field(default_factory=dict)
    finite_to_one: bool | None = None

    @property
    def ok(self) -> bool:
        return self.surjective and self.first_violation is None


def verify_factor(
    fm: FactorMap, n_max: int, fiber_bound: int | None = None
) -> FactorReport:
    """Check surjectivity, equivariance for n <= n_max, and fiber sizes.

    Returns a structured report; the first violating (n, point label) is
    recorded instead of raising so callers can present it.
    """
    dom, cod = fm.domain, fm.codomain
    pi = np.asarray(fm.map_ids, dtype=np.int64)
    n_dom, n_cod = len(dom.space), len(cod.space)

    hit = np.zeros(n_cod, dtype=bool)
    hit[pi] = True
    surjective = bool(hit.all())

    counts = np.bincount(pi, minlength=n_cod)
    max_fiber = int(counts.max())
    sizes: dict[int, int] = {}
    for s in np.unique(counts[counts > 0]):
        sizes[int(s)] = int(np.sum(counts == s))

    first_violation = None
    checked = 0
    ids = np.arange(n_dom, dtype=np.int64)
    for n in range(1, n_max + 1):
        if dom.maps.vector_rule is not None and cod.maps.vector_rule is not None:
            fx = np.asarray(dom.maps.vector_rule(n, ids), dtype=np.int64)
            gy = np.asarray(cod.maps.vector_rule(n, np.arange(n_cod, dtype=np.int64)))
            lhs = pi[fx]
            rhs = gy[pi]
            bad = np.nonzero(lhs != rhs)[0]
            if bad.size:
                first_violation = (n, dom.space.labels[int(bad[0])])
                break
        else:
            stop = False
            for x in range(n_dom):
                if pi[dom.maps.rule(n, x)] != cod.maps.rule(n, int(pi[x])):
                    first_violation = (n, dom.space.labels[x])
                    stop = True
                    break
            if stop:
                break
        checked = n
    report = FactorReport(
        surjective=surjective,
        equivariant_to=checked,
        first_violation=first_violation,
        max_fiber=max_fiber,
        fiber_sizes=sizes,
    )
    if fiber_bound is not None:
        report.finite_to_one = max_fiber <= fiber_bound
    return report


def example_factor_map(L: int, n_lev: int, validate: str = "auto") -> FactorMap:
    """The limit-gluing factor from the two-limit onto the one-limit system."""
    dom = example_x_system(L, n_lev, validate)
    cod = example_y_system(L, n_lev, validate)
    pi = []
    for lab in dom.space.labels:
        pi.append(cod.space.index(example_factor(lab)))
    return FactorMap(dom, cod, tuple(pi))


def fibers(fm: FactorMap) -> dict[int, list[int]]:
    """Codomain id -> list of domain ids mapping onto it."""
    out: dict[int, list[int]] = {}
    for x, y in enumerate(fm.map_ids):
        out.setdefault(int(y), []).append(x)
    return out


def build_system(name: str, **params) -> Nads:
    """CLI-addressable system builders by external name."""
    if name == "example_X":
        return example_x_system(params["word_length"], params["level_cap"])
    if name == "example_Y":
        return example_y_system(params["word_length"], params["level_cap"])
    if name == "full_shift_constant":
        return full_shift_system(params["word_length"])
    if name == "random_maps":
        return random_system(params["n"], params["seed"], params.get("period"))
    raise ValueError(f"unknown system builder {name!r}")
