"""Certified separation of projected measure vectors.

This implements the finite apparatus behind the zero-entropy transfer
argument: partition the space along a fine subcover, read each measure as
its vector of cell masses (psi), project through the geometrically
weighted evaluation map (phi), and certify that measures which are
orbit-separated in the weak-star metric stay separated after both
projections, with an explicit margin against ``eps / (9 * 2**K0)``.

All quantities are exact rationals; a certificate that fails raises, it
never rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import caps
from .errors import (
    CoverTooCoarse,
    EmptyCell,
    PreconditionNotSeparated,
    SeparationFailure,
    SizeCapExceeded,
)
from .entropy import OpenCover, joined_preimages, minimal_subcover
from .measures import (
    AtomicMeasure,
    TestFunctionFamily,
    default_family,
    weak_star_bowen,
)
from .nads import Nads
from .space import (
    KIND_INTERIOR,
    FiniteSpace,
    as_fraction,
    word_depth_arrays,
)


def default_k0(eps) -> int:
    """Truncation index with geometric tail below eps/2: ceil(log2(4/eps))."""
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    ratio = 4 / eps
    return max(1, math.ceil(math.log2(ratio)))


# ---------------------------------------------------------------------------
# partitions from subcovers


@dataclass
class CoverPartition:
    """Successive-difference partition of a subcover, with representatives.

    Cell k is parent k minus all earlier parents; every cell is nonempty
    and owns its lowest-indexed point as representative.
    """

    space: FiniteSpace
    cells: np.ndarray  # (L, n_points) bool, disjoint, covering
    parents: np.ndarray  # (L, n_points) bool
    representatives: list[int]

    def __len__(self) -> int:
        return self.cells.shape[0]

    def assignment(self) -> np.ndarray:
        return self.cells.argmax(axis=0).astype(np.int64)

    def cell_of(self, x: int) -> int:
        return int(np.argmax(self.cells[:, x]))


def partition_from_cover(subcover: OpenCover) -> CoverPartition:
    """Peel the subcover into disjoint cells, rejecting redundant elements.

    Raises EmptyCell(k) (1-based) when element k is swallowed by its
    predecessors, which signals the subcover was not minimal.
    """
    masks = subcover.masks
    taken = np.zeros(masks.shape[1], dtype=bool)
    cells = []
    reps = []
    for k, row in enumerate(masks, start=1):
        cell = row & ~taken
        if not cell.any():
            raise EmptyCell(k)
        cells.append(cell)
        reps.append(int(np.argmax(cell)))
        taken |= row
    return CoverPartition(subcover.space, np.array(cells), masks.copy(), reps)


# ---------------------------------------------------------------------------
# modulus-of-continuity thresholds


@dataclass
class DeltaChoice:
    """A distance threshold making every family function move less than
    eps/9 across pairs closer than delta."""

    delta: Fraction
    method: str
    exhaustive_delta: Fraction | None
    lipschitz_delta: Fraction | None


def choose_delta(
    fam: TestFunctionFamily,
    K0: int,
    eps,
    mode: str = "auto",
    cap: int | None = None,
) -> DeltaChoice:
    """Largest certified threshold from pairwise search, or the Lipschitz one.

    The exhaustive search inspects every pair and returns the largest
    realized distance below which all g_1..g_K0 gaps stay under eps/9; it
    is capped by space size. Families carrying a Lipschitz constant also
    admit the closed-form ``eps / (9 * constant)``, used on large spaces.
    """
    eps = as_fraction(eps)
    space = fam.space
    n = len(space)
    bound = eps / 9

    lip = None
    if fam.lipschitz_constant is not None:
        if fam.lipschitz_constant == 0:
            lip = space.diameter if space.diameter > 0 else Fraction(1)
        else:
            lip = bound / fam.lipschitz_constant

    if n == 1:
        return DeltaChoice(
            space.diameter if space.diameter > 0 else Fraction(1),
            "trivial",
            None,
            lip,
        )

    cap = caps.DELTA_EXHAUSTIVE_CAP if cap is None else cap
    if mode == "auto":
        mode = "exhaustive" if n <= cap else "lipschitz"

    if mode == "lipschitz":
        if lip is None:
            raise ValueError("family has no Lipschitz constant")
        return DeltaChoice(lip, "lipschitz", None, lip)

    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")
    if n > cap:
        raise SizeCapExceeded(f"exhaustive threshold search on {n} points, cap {cap}")

    delta = space.diameter
    for x in range(n):
        for y in range(x + 1, n):
            gap = max(abs(fam(m, x) - fam(m, y)) for m in range(1, K0 + 1))
            if gap >= bound:
                d = space.distance(x, y)
                if d < delta:
                    delta = d
    return DeltaChoice(delta, "exhaustive", delta, lip)


# ---------------------------------------------------------------------------
# the two projections


def psi(mu: AtomicMeasure, part: CoverPartition) -> list[Fraction]:
    """Vector of cell masses; lies in the simplex of the cell count."""
    out = [Fraction(0)] * len(part)
    for x, w in mu.atoms:
        out[part.cell_of(x)] += w
    return out


@dataclass
class PhiImage:
    """Projected vector indexed by (function index n <= K0, orbit step j < N)."""

    K0: int
    N: int
    coords: tuple[tuple[Fraction, ...], ...]

    def sup_norm(self) -> Fraction:
        return max(abs(c) for row in self.coords for c in row)

    def linf_distance(self, other: "PhiImage") -> Fraction:
        return max(
            abs(a - b)
            for ra, rb in zip(self.coords, other.coords)
            for a, b in zip(ra, rb)
        )


class PhiOperator:
    """Evaluation map x -> ((1/2**n) sum_k x_k g_n(orbit_j(z_k)))_{n,j}.

    Representative orbit values are tabulated once, so applying the map to
    sparse mass vectors costs only the nonzero entries.
    """

    def __init__(
        self,
        sys: Nads,
        part: CoverPartition,
        fam: TestFunctionFamily,
        K0: int,
        N: int,
    ):
        self.sys = sys
        self.part = part
        self.fam = fam
        self.K0 = K0
        self.N = N
        rows = sys.orbit_rows(N)
        self._rep_orbit = [
            [int(rows[j][z]) for j in range(N)] for z in part.representatives
        ]
        self._gcache: dict[tuple[int, int], Fraction] = {}

    def g_at_rep(self, n: int, j: int, k: int) -> Fraction:
        point = self._rep_orbit[k][j]
        key = (n, point)
        v = self._gcache.get(key)
        if v is None:
            v = self.fam(n, point)
            self._gcache[key] = v
        return v

    def apply(self, x: Sequence[Fraction]) -> PhiImage:
        norm1 = sum(abs(as_fraction(v)) for v in x)
        if norm1 > 1:
            raise ValueError(f"input 1-norm {norm1} exceeds the unit ball")
        nz = [(k, as_fraction(v)) for k, v in enumerate(x) if v != 0]
        coords = []
        for n in range(1, self.K0 + 1):
            row = []
            for j in range(self.N):
                s = sum((w * self.g_at_rep(n, j, k) for k, w in nz), Fraction(0))
                row.append(s / (1 << n))
            coords.append(tuple(row))
        img = PhiImage(self.K0, self.N, tuple(coords))
        if nz and img.sup_norm() > norm1:
            raise AssertionError("operator norm certificate violated")
        return img


def phi(
    x: Sequence[Fraction],
    part: CoverPartition,
    fam: TestFunctionFamily,
    K0: int,
    N: int,
    sys: Nads,
) -> PhiImage:
    return PhiOperator(sys, part, fam, K0, N).apply(x)


# ---------------------------------------------------------------------------
# fine covers on word/depth spaces


def profile_cover(space: FiniteSpace, prefix_len: int) -> OpenCover:
    """Partition interiors by (level, leading word symbols); limits alone.

    On a two-limit space, cells sharing ``prefix_len >= p + 1`` symbols at
    one level have diameter at most ``2**-p``; the one-limit metric gives
    ``2**-prefix_len``.
    """
    data = word_depth_arrays(space)
    L = data.L
    p = min(prefix_len, L)
    rows = []
    for i in range(len(space)):
        if data.kind[i] != KIND_INTERIOR:
            row = np.zeros(len(space), dtype=bool)
            row[i] = True
            rows.append(row)
    head = data.word >> (L - p)
    interior = data.kind == KIND_INTERIOR
    levels = np.unique(data.level[interior])
    for lev in levels:
        at = interior & (data.level == lev)
        for h in np.unique(head[at]):
            rows.append(at & (head == h))
    return OpenCover(space, np.array(rows), check=True)


def fine_cover_for_delta(space: FiniteSpace, delta) -> OpenCover:
    """Profile cover whose elements are provably finer than delta."""
    delta = as_fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    p = 0
    while Fraction(1, 1 << p) >= delta:
        p += 1
    extra = 1 if space.meta.get("family") == "x" else 0
    return profile_cover(space, p + extra)


# ---------------------------------------------------------------------------
# the certificate


@dataclass
class PairReport:
    i: int
    j: int
    precondition_value: Fraction
    head_value: Fraction
    i1: Fraction
    i2: Fraction
    i3: Fraction
    margin: Fraction
    threshold: Fraction
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "pair": [self.i, self.j],
            "precondition_value": str(self.precondition_value),
            "head_value": str(self.head_value),
            "I1": str(self.i1),
            "I2": str(self.i2),
            "I3": str(self.i3),
            "margin": str(self.margin),
            "threshold": str(self.threshold),
            "pass": self.passed,
        }


@dataclass
class CertificateReport:
    eps: Fraction
    K0: int
    N: int
    delta: Fraction
    n_cells: int
    pairs: list[PairReport]

    @property
    def all_passed(self) -> bool:
        return all(p.passed for p in self.pairs)

    def to_json_dict(self) -> dict:
        return {
            "eps": str(self.eps),
            "K0": self.K0,
            "N": self.N,
            "delta": str(self.delta),
            "n_cells": self.n_cells,
            "all_passed": self.all_passed,
            "pairs": [p.to_json_dict() for p in self.pairs],
        }


def _element_diameter_below(space: FiniteSpace, ids: Sequence[int], bound_scaled: int) -> bool:
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            if space.scaled(ids[a], ids[b]) >= bound_scaled:
                return False
    return True


def _cell_orbit_diameter_below(
    sys: Nads, ids: Sequence[int], N: int, bound_scaled: int
) -> bool:
    rows = sys.orbit_rows(N)
    sp = sys.space
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            for j in range(N):
                if sp.scaled(int(rows[j][ids[a]]), int(rows[j][ids[b]])) >= bound_scaled:
                    return False
    return True


def separation_certificate(
    E: Sequence[AtomicMeasure],
    sys: Nads,
    cover: OpenCover,
    eps,
    K0: int | None = None,
    N: int = 6,
    fam: TestFunctionFamily | None = None,
    delta=None,
    precondition_K: int | None = None,
    raise_on_failure: bool = True,
) -> CertificateReport:
    """Certify projected separation of orbit-separated measures.

    Requires the cover to be finer than the continuity threshold delta and
    every partition cell to stay delta-fine along the first N orbit steps
    (checked directly); requires E pairwise orbit-separated beyond eps in
    the truncated weak-star metric. Then for every pair the certificate
    computes the three-term decomposition (integral-vs-cells for each
    measure, plus the projected difference), asserts the two cell-term
    bounds eps/9, and asserts the projected images are separated beyond
    eps / (9 * 2**K0), returning exact margins.
    """
    eps = as_fraction(eps)
    fam = fam or default_family(sys.space)
    K0 = default_k0(eps) if K0 is None else K0
    if delta is None:
        delta = choose_delta(fam, K0, eps).delta
    else:
        delta = as_fraction(delta)
    space = sys.space
    delta_scaled = space.lt_threshold(delta)

    for e in range(len(cover)):
        ids = cover.element_ids(e)
        if not _element_diameter_below(space, ids, delta_scaled):
            raise CoverTooCoarse(f"cover element {e} has diameter >= {delta}")

    joined = joined_preimages(sys, cover, N)
    count, selection = minimal_subcover(joined)
    sub = OpenCover(space, joined.masks[selection], check=True)
    part = partition_from_cover(sub)

    assign = part.assignment()
    for k in range(len(part)):
        ids = [int(i) for i in np.nonzero(assign == k)[0]]
        if not _cell_orbit_diameter_below(sys, ids, N, delta_scaled):
            raise CoverTooCoarse(
                f"cell {k} spreads beyond {delta} within {N} orbit steps"
            )

    K_pre = K0 if precondition_K is None else precondition_K
    values: dict[tuple[int, int], Fraction] = {}
    for a in range(len(E)):
        for b in range(a + 1, len(E)):
            v = weak_star_bowen(sys, N, E[a], E[b], fam, K_pre)
            if not v.exceeds(eps):
                raise PreconditionNotSeparated((a, b), v.value, eps)
            values[(a, b)] = v.value

    op = PhiOperator(sys, part, fam, K0, N)
    rows = sys.orbit_rows(N)

    def integral_table(mu: AtomicMeasure) -> list[list[Fraction]]:
        out = []
        for n in range(1, K0 + 1):
            row = []
            for j in range(N):
                s = sum(
                    (w * fam(n, int(rows[j][x])) for x, w in mu.atoms), Fraction(0)
                )
                row.append(s)
            out.append(row)
        return out

    images = []
    tables = []
    i1s = []
    bound = eps / 9
    for mu in E:
        img = op.apply(psi(mu, part))
        tab = integral_table(mu)
        i1 = max(
            abs(tab[n][j] - img.coords[n][j] * (1 << (n + 1)))
            for n in range(K0)
            for j in range(N)
        )
        images.append(img)
        tables.append(tab)
        i1s.append(i1)

    threshold = eps / (9 * (1 << K0))
    reports = []
    for a in range(len(E)):
        for b in range(a + 1, len(E)):
            margin = images[a].linf_distance(images[b])
            i2 = max(
                abs(images[a].coords[n][j] - images[b].coords[n][j]) * (1 << (n + 1))
                for n in range(K0)
                for j in range(N)
            )
            head = max(
                sum(
                    (
                        abs(tables[a][n][j] - tables[b][n][j]) / (1 << (n + 1))
                        for n in range(K0)
                    ),
                    Fraction(0),
                )
                for j in range(N)
            )
            for n in range(K0):
                for j in range(N):
                    lhs = abs(tables[a][n][j] - tables[b][n][j])
                    s_a = images[a].coords[n][j] * (1 << (n + 1))
                    s_b = images[b].coords[n][j] * (1 << (n + 1))
                    rhs = (
                        abs(tables[a][n][j] - s_a)
                        + abs(s_a - s_b)
                        + abs(tables[b][n][j] - s_b)
                    )
                    if lhs > rhs:
                        raise AssertionError("three-term decomposition violated")
            passed = i1s[a] <= bound and i1s[b] <= bound and margin > threshold
            rep = PairReport(
                a,
                b,
                values[(a, b)],
                head,
                i1s[a],
                i2,
                i1s[b],
                margin,
                threshold,
                passed,
            )
            if raise_on_failure and not passed:
                raise SeparationFailure((a, b), margin, threshold)
            reports.append(rep)

    return CertificateReport(eps, K0, N, delta, len(part), reports)
