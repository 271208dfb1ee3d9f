"""Finitely supported probability measures and the truncated weak-star metric.

Weights are exact rationals; the metric against a fixed test-function
family is computed as a truncated series plus a certified tail bound, so
"distance > eps" claims are decided exactly. The tuple embedding sends a
k-tuple of points to the measure weighting coordinate i by
``2**i / (2**(k+1) - 2)``; its injectivity rests on a 2-adic divisibility
argument that is exposed here as an exact integer test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DegenerateSpace, SizeCapExceeded, TruncationTooCoarse
from .nads import Nads, product_system
from .space import FiniteSpace, as_fraction

_INT64_GUARD = 1 << 62


@dataclass(frozen=True)
class AtomicMeasure:
    """Probability measure with finitely many atoms (point id, weight)."""

    atoms: tuple[tuple[int, Fraction], ...]

    def __post_init__(self):
        total = Fraction(0)
        last = -1
        for x, w in self.atoms:
            if x <= last:
                raise ValueError("atoms must be sorted by id and distinct")
            if w <= 0:
                raise ValueError("weights must be positive")
            last = x
            total += w
        if total != 1:
            raise ValueError(f"weights sum to {total}, expected 1")

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, object]]) -> "AtomicMeasure":
        merged: dict[int, Fraction] = {}
        for x, w in pairs:
            merged[int(x)] = merged.get(int(x), Fraction(0)) + as_fraction(w)
        atoms = tuple(sorted((x, w) for x, w in merged.items() if w != 0))
        return AtomicMeasure(atoms)

    @staticmethod
    def dirac(x: int) -> "AtomicMeasure":
        return AtomicMeasure(((int(x), Fraction(1)),))

    @staticmethod
    def uniform(ids: Sequence[int]) -> "AtomicMeasure":
        n = len(ids)
        return AtomicMeasure.from_pairs((x, Fraction(1, n)) for x in ids)

    def weight(self, x: int) -> Fraction:
        for p, w in self.atoms:
            if p == x:
                return w
        return Fraction(0)

    def support(self) -> list[int]:
        return [x for x, _ in self.atoms]

    def mass_on(self, member: Callable[[int], bool]) -> Fraction:
        return sum((w for x, w in self.atoms if member(x)), Fraction(0))

    def serialize(self) -> list[tuple[int, int, int]]:
        return [(x, w.numerator, w.denominator) for x, w in self.atoms]

    @staticmethod
    def deserialize(triples: Iterable[tuple[int, int, int]]) -> "AtomicMeasure":
        return AtomicMeasure.from_pairs((x, Fraction(p, q)) for x, p, q in triples)


def integrate(g: Callable[[int], object], mu: AtomicMeasure) -> Fraction:
    """Exact integral: sum of weight * g(point)."""
    return sum((w * as_fraction(g(x)) for x, w in mu.atoms), Fraction(0))


def pushforward(sys: Nads, n: int, mu: AtomicMeasure) -> AtomicMeasure:
    """Image measure under the n-th map; colliding atoms merge."""
    return AtomicMeasure.from_pairs((sys.maps.rule(n, x), w) for x, w in mu.atoms)


def push_orbit(sys: Nads, j: int, mu: AtomicMeasure) -> AtomicMeasure:
    """Image under the composition of the first j maps (j = 0: identity)."""
    if j == 0:
        return mu
    row = sys.orbit_rows(j + 1)[j]
    return AtomicMeasure.from_pairs((int(row[x]), w) for x, w in mu.atoms)


# ---------------------------------------------------------------------------
# test-function families


class TestFunctionFamily:
    """Indexed sequence g_1, g_2, ... of [0,1]-valued functions on a space.

    ``evaluate(n, x)`` must be exact. ``period`` is the cycle length after
    which the functions repeat; ``common_denominator`` bounds every value's
    denominator (enables fast integer paths) and may be None.
    """

    __test__ = False  # not a pytest class, despite the name

    def __init__(
        self,
        space: FiniteSpace,
        evaluate: Callable[[int, int], Fraction],
        period: int,
        lipschitz_constant: Fraction | None = None,
        common_denominator: int | None = None,
        description: str = "",
    ):
        self.space = space
        self._evaluate = evaluate
        self.period = period
        self.lipschitz_constant = lipschitz_constant
        self.common_denominator = common_denominator
        self.description = description
        self._sup_cache: dict[int, Fraction] = {}

    def __call__(self, n: int, x: int) -> Fraction:
        if n < 1:
            raise ValueError("function index starts at 1")
        return self._evaluate(n, x)

    def sup_norm(self, n: int) -> Fraction:
        key = (n - 1) % self.period
        if key not in self._sup_cache:
            self._sup_cache[key] = max(
                abs(self._evaluate(n, x)) for x in range(len(self.space))
            )
        return self._sup_cache[key]

    def separates_points(self, cap: int = 64) -> bool:
        n_pts = len(self.space)
        if n_pts > cap:
            raise SizeCapExceeded(f"separation check on {n_pts} points, cap {cap}")
        for x in range(n_pts):
            for y in range(x + 1, n_pts):
                if all(
                    self._evaluate(n, x) == self._evaluate(n, y)
                    for n in range(1, self.period + 1)
                ):
                    return False
        return True


def default_family(space: FiniteSpace) -> TestFunctionFamily:
    """Scaled distance functions to each point in turn, cycled.

    ``g_n(x) = rho(x, q_n) / diameter`` with q_n running through the points;
    values lie in [0, 1], the family is 1/diameter-Lipschitz and separates
    points (the function based at y assigns 0 to y and a positive value to
    any other x).
    """
    n_pts = len(space)
    diam = space.diameter
    if diam == 0:
        if n_pts > 1:
            raise DegenerateSpace("diameter 0 with more than one point")
        return TestFunctionFamily(
            space, lambda n, x: Fraction(0), 1, Fraction(0), 1, "zero family"
        )

    def evaluate(n: int, x: int) -> Fraction:
        q = (n - 1) % n_pts
        return Fraction(space.scaled(x, q), space.denominator) / diam

    return TestFunctionFamily(
        space,
        evaluate,
        period=n_pts,
        lipschitz_constant=1 / diam,
        common_denominator=space.denominator * diam.numerator,
        description="scaled point-distance family",
    )


# ---------------------------------------------------------------------------
# weak-star distance


@dataclass(frozen=True)
class WeakStarValue:
    """Truncated series value plus a bound on the discarded tail."""

    value: Fraction
    tail_bound: Fraction

    @property
    def upper(self) -> Fraction:
        return self.value + self.tail_bound

    def exceeds(self, eps) -> bool:
        """Certified ``distance > eps`` (the truncation only undercounts)."""
        return self.value > as_fraction(eps)


def weak_star_distance(
    mu: AtomicMeasure,
    nu: AtomicMeasure,
    fam: TestFunctionFamily,
    K: int,
    normalization: str = "head",
) -> WeakStarValue:
    """Sum over n <= K of |integral difference| / weight(n), plus tail bound.

    ``head`` divides by 2**n (valid for families with sup norm <= 1; tail
    bound 2 * 2**-K); ``walters`` divides by 2**n * (sup + 1) (tail 2**-K).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    total = Fraction(0)
    for n in range(1, K + 1):
        gn = lambda x, _n=n: fam(_n, x)
        diff = abs(integrate(gn, mu) - integrate(gn, nu))
        if normalization == "head":
            total += diff / (1 << n)
        elif normalization == "walters":
            total += diff / ((1 << n) * (fam.sup_norm(n) + 1))
        else:
            raise ValueError(f"unknown normalization {normalization!r}")
    tail = Fraction(2 if normalization == "head" else 1, 1 << K)
    return WeakStarValue(total, tail)


def weak_star_bowen(
    sys: Nads,
    N: int,
    mu: AtomicMeasure,
    nu: AtomicMeasure,
    fam: TestFunctionFamily,
    K: int,
    normalization: str = "head",
) -> WeakStarValue:
    """Orbit-maximum weak-star distance over the first N pushforward steps."""
    if N < 1:
        raise ValueError("horizon must be >= 1")
    best = Fraction(0)
    tail = Fraction(0)
    for j in range(N):
        d = weak_star_distance(
            push_orbit(sys, j, mu), push_orbit(sys, j, nu), fam, K, normalization
        )
        tail = d.tail_bound
        if d.value > best:
            best = d.value
    return WeakStarValue(best, tail)


# ---------------------------------------------------------------------------
# tuple embedding


def embed_tuple(points: Sequence[int]) -> AtomicMeasure:
    """Weight coordinate i (1-based) by 2**i / (2**(k+1) - 2); repeats merge."""
    k = len(points)
    if k < 1:
        raise ValueError("need at least one point")
    denom = (1 << (k + 1)) - 2
    return AtomicMeasure.from_pairs(
        (x, Fraction(1 << i, denom)) for i, x in enumerate(points, start=1)
    )


def tuple_embedding_witness(xs: Sequence[int], ys: Sequence[int]) -> dict:
    """Exact 2-adic witness that distinct tuples embed to distinct measures.

    Let t be the first differing coordinate (1-based) and g the indicator
    of ``xs[t]``. Against the unnormalized weights 2**i, the part of the
    two integrals over coordinates >= t differs mod 2**(t+1): the x-side
    tail contains the lone term 2**t while every y-side tail term has
    i > t. Hence the full integer integrals differ.
    """
    if len(xs) != len(ys):
        raise ValueError("tuples must have equal length")
    t = next((i for i, (a, b) in enumerate(zip(xs, ys), start=1) if a != b), None)
    if t is None:
        raise ValueError("tuples are identical")
    target = xs[t - 1]
    ix = sum(1 << i for i, a in enumerate(xs, start=1) if a == target)
    iy = sum(1 << i for i, b in enumerate(ys, start=1) if b == target)
    tail_x = sum(1 << i for i, a in enumerate(xs, start=1) if a == target and i >= t)
    tail_y = sum(1 << i for i, b in enumerate(ys, start=1) if b == target and i >= t)
    modulus = 1 << (t + 1)
    return {
        "t": t,
        "integral_x": ix,
        "integral_y": iy,
        "x_tail_mod": tail_x % modulus,
        "y_tail_mod": tail_y % modulus,
        "distinct": ix != iy,
    }


# ---------------------------------------------------------------------------
# induced tuple systems


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def pairwise_weak_star_bowen_matrix(
    sys: Nads,
    N: int,
    measures: Sequence[AtomicMeasure],
    fam: TestFunctionFamily,
    K: int,
) -> tuple[np.ndarray, int]:
    """All pairwise truncated orbit-max weak-star distances, as scaled ints.

    Returns (matrix, denominator); entry [a, b] / denominator equals
    ``weak_star_bowen(sys, N, measures[a], measures[b], fam, K).value``.
    Pushforwards only merge atoms, so the step-0 weight denominator is a
    common multiple for every orbit step.
    """
    pushed0 = list(measures)
    mats = []
    _, den0 = _integral_matrix(pushed0, fam, min(K, 1))
    for j in range(N):
        pushed = [push_orbit(sys, j, m) for m in measures]
        integrals, den_j = _integral_matrix(pushed, fam, K)
        scale = den0 // den_j
        if den0 % den_j:
            raise ValueError("pushforward denominators must divide the originals")
        total = len(measures)
        worst = (2 * den0) << K
        if worst * K < _INT64_GUARD:
            ints = integrals.astype(np.int64) * scale
            acc = np.zeros((total, total), dtype=np.int64)
            for n in range(1, K + 1):
                col = ints[:, n - 1]
                acc += np.abs(col[:, None] - col[None, :]) << (K - n)
        else:
            acc = np.zeros((total, total), dtype=object)
            for n in range(1, K + 1):
                col = integrals[:, n - 1] * scale
                acc = acc + np.abs(col[:, None] - col[None, :]) * (1 << (K - n))
        mats.append(acc)
    out = mats[0]
    for m in mats[1:]:
        out = np.maximum(out, m)
    return out, den0 << K


def _integral_matrix(
    measures: Sequence[AtomicMeasure], fam: TestFunctionFamily, K: int
) -> tuple[np.ndarray, int]:
    """Integrals of g_1..g_K against every measure, as exact integers over
    one common denominator (object dtype; values may exceed int64)."""
    weight_den = 1
    for m in measures:
        for _, w in m.atoms:
            weight_den = _lcm(weight_den, w.denominator)
    fam_den = fam.common_denominator
    if fam_den is None:
        fam_den = 1
        for n in range(1, min(K, fam.period) + 1):
            for x in range(len(fam.space)):
                fam_den = _lcm(fam_den, fam(n, x).denominator)
    denom = weight_den * fam_den

    # g-value table over one family period, exact scaled integers
    n_pts = len(fam.space)
    period = min(fam.period, max(K, 1))
    gtab = np.zeros((period, n_pts), dtype=object)
    for p in range(period):
        for x in range(n_pts):
            v = fam(p + 1, x) * fam_den
            if v.denominator != 1:
                raise ValueError("family denominator bound is wrong")
            gtab[p, x] = int(v)

    out = np.zeros((len(measures), K), dtype=object)
    for mi, m in enumerate(measures):
        scaled_atoms = [
            (x, int(w * weight_den)) for x, w in m.atoms
        ]  # exact: weight_den is a common multiple
        for n in range(1, K + 1):
            row = gtab[(n - 1) % fam.period] if fam.period <= period else None
            if row is None:
                v = integrate(lambda x, _n=n: fam(_n, x), m) * denom
                out[mi, n - 1] = int(v)
            else:
                out[mi, n - 1] = sum(wi * int(row[x]) for x, wi in scaled_atoms)
    return out, denom


def induced_tuple_system(
    sys: Nads,
    k: int,
    fam: TestFunctionFamily | None = None,
    K: int = 16,
    size_cap: int | None = None,
) -> Nads:
    """System of embedded k-tuples under the truncated weak-star metric.

    Points are the k-tuples of the base space in product order, distances
    are truncated weak-star distances between the embedded measures, and
    the maps push tuples forward coordinatewise (equal to the measure
    pushforward by equivariance). Raises TruncationTooCoarse when the tail
    bound reaches half the minimum positive distance, i.e. when K cannot
    certify injectivity on this space.
    """
    fam = fam or default_family(sys.space)
    prod = product_system(sys, k, size_cap)
    n_base = len(sys.space)
    total = len(prod.space)

    tuples = [
        [(t // n_base ** (k - 1 - i)) % n_base for i in range(k)]
        for t in range(total)
    ]
    measures = [embed_tuple(tp) for tp in tuples]

    integrals, int_den = _integral_matrix(measures, fam, K)
    # distance numerator over int_den * 2**K: sum_n |dI_n| * 2**(K-n)
    worst = (2 * int_den) << K  # bound on any accumulated numerator
    if worst * K < _INT64_GUARD:
        ints = integrals.astype(np.int64)
        big = np.zeros((total, total), dtype=np.int64)
        for n in range(1, K + 1):
            col = ints[:, n - 1]
            big += np.abs(col[:, None] - col[None, :]) << (K - n)
    else:
        big = np.zeros((total, total), dtype=object)
        for n in range(1, K + 1):
            col = integrals[:, n - 1]
            big = big + np.abs(col[:, None] - col[None, :]) * (1 << (K - n))
    denom = int_den << K

    tail = Fraction(2, 1 << K)
    if total > 1:
        off_mask = ~np.eye(total, dtype=bool)
        if big.dtype == object:
            off = [int(v) for v in big[off_mask]]
            zero_off = any(v == 0 for v in off)
            min_pos_num = min((v for v in off if v > 0), default=0)
        else:
            off = big[off_mask]
            zero_off = bool((off == 0).any())
            pos = off[off > 0]
            min_pos_num = int(pos.min()) if pos.size else 0
        if zero_off:
            raise TruncationTooCoarse(
                "distinct tuples at weak-star distance 0 under this family/K"
            )
        min_pos = Fraction(min_pos_num, denom)
        if tail >= min_pos / 2:
            raise TruncationTooCoarse(
                f"tail bound {tail} >= half the minimum distance {min_pos}"
            )
        exact_flag = min_pos > tail
    else:
        min_pos = Fraction(0)
        exact_flag = True

    max_num = int(big.max()) if total > 1 else 0
    dense = (
        np.ascontiguousarray(big)
        if big.dtype != object
        else (big.astype(np.int64) if max_num < _INT64_GUARD else None)
    )

    def scaled_fn(i: int, j: int) -> int:
        return int(big[i, j])

    space = FiniteSpace(
        prod.space.labels,
        denom,
        scaled_fn,
        max_num,
        meta={
            "builder": "induced_tuples",
            "k": k,
            "K": K,
            "base": sys.space.meta.get("builder"),
            "weak_star_exact": exact_flag,
            "min_positive": str(min_pos),
            "tail_bound": str(tail),
        },
        dense=dense,
    )
    return Nads(space, prod.maps, name=f"induced({sys.name},k={k})")
