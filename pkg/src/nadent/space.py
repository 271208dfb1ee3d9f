"""Finite metric spaces with exact rational distances.

Distances are stored as integer numerators over one common denominator per
space, so comparisons against rational thresholds are exact (no float ties).
Besides generic spaces built from an explicit metric, this module provides
three structured families used throughout the experiments:

* ``build_shift_space`` -- all binary words of a fixed length under the
  first-disagreement metric ``2**-k``;
* ``build_example_x`` -- word/depth points plus two limit points, where
  points whose word starts with 0 accumulate at one limit and points
  starting with 1 at the other;
* ``build_example_y`` -- the one-limit variant in which every fiber of
  words at depth ``n`` has diameter at most ``1/n``, so everything
  accumulates at the single limit point.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import caps
from .errors import (
    LengthMismatch,
    MetricAxiomViolation,
    SizeCapExceeded,
)
from ._kernels import triangle_violation

KIND_INTERIOR = 0
KIND_LIMIT_ZERO = 1
KIND_LIMIT_ONE = 2

# Guard for the int64 fast path: scaled distances must stay below 2**62.
_INT64_GUARD = 1 << 62


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like ``"1/4"`` and Fractions; reject floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


@dataclass(frozen=True)
class Word:
    """Fixed-length binary word (a truncated one-sided 0/1 sequence)."""

    bits: str

    def __post_init__(self):
        if len(self.bits) < 1 or any(c not in "01" for c in self.bits):
            raise ValueError(f"not a binary word: {self.bits!r}")

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i: int) -> int:
        return int(self.bits[i])

    @staticmethod
    def from_int(value: int, length: int) -> "Word":
        return Word(format(value, f"0{length}b"))

    def to_int(self) -> int:
        return int(self.bits, 2)

    def shift(self) -> "Word":
        """Drop the first symbol and pad with 0 on the right."""
        return Word(self.bits[1:] + "0")

    def first_difference(self, other: "Word") -> int | None:
        if len(self.bits) != len(other.bits):
            raise LengthMismatch(
                f"word lengths differ: {len(self.bits)} vs {len(other.bits)}"
            )
        for k, (a, b) in enumerate(zip(self.bits, other.bits)):
            if a != b:
                return k
        return None


def sigma_metric(a: Word, b: Word) -> Fraction:
    """First-disagreement metric on equal-length words: ``2**-k``, 0 if equal."""
    k = a.first_difference(b)
    if k is None:
        return Fraction(0)
    return Fraction(1, 1 << k)


def shift_word(w: Word) -> Word:
    return w.shift()


@dataclass(frozen=True)
class SpacePoint:
    """Point of a word/depth space: an interior (word, level) pair or a limit."""

    kind: str  # "interior" | "limit_zero" | "limit_one"
    word: Word | None = None
    level: int | None = None

    def __post_init__(self):
        if self.kind == "interior":
            if self.word is None or self.level is None or self.level < 1:
                raise ValueError("interior points need a word and a level >= 1")
        elif self.kind in ("limit_zero", "limit_one"):
            if self.word is not None or self.level is not None:
                raise ValueError("limit points carry no word/level")
        else:
            raise ValueError(f"unknown point kind {self.kind!r}")

    @staticmethod
    def interior(word: Word, level: int) -> "SpacePoint":
        return SpacePoint("interior", word, level)

    @staticmethod
    def limit_zero() -> "SpacePoint":
        return SpacePoint("limit_zero")

    @staticmethod
    def limit_one() -> "SpacePoint":
        return SpacePoint("limit_one")


class FiniteSpace:
    """Immutable finite metric space addressed by integer point ids.

    ``scaled(i, j)`` returns the exact integer numerator of the distance
    over ``denominator``; ``distance(i, j)`` the same value as a Fraction.
    ``dense_scaled()`` materializes the full int64 matrix (subject to a
    size cap) for the array kernels.
    """

    def __init__(
        self,
        labels: Sequence,
        denominator: int,
        scaled_fn: Callable[[int, int], int],
        diameter_scaled: int,
        meta: dict | None = None,
        dense: np.ndarray | None = None,
        dense_builder: Callable[[], np.ndarray] | None = None,
    ):
        self.labels = tuple(labels)
        self.denominator = int(denominator)
        self._scaled_fn = scaled_fn
        self.diameter = Fraction(diameter_scaled, self.denominator)
        self.meta = dict(meta or {})
        self._dense = dense
        self._dense_builder = dense_builder
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise ValueError("point labels must be distinct")

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        kind = self.meta.get("builder", "generic")
        return f"FiniteSpace({len(self)} points, {kind})"

    def index(self, label) -> int:
        return self._index[label]

    def scaled(self, i: int, j: int) -> int:
        return self._scaled_fn(i, j)

    def distance(self, i: int, j: int) -> Fraction:
        return Fraction(self._scaled_fn(i, j), self.denominator)

    def has_dense(self) -> bool:
        return self._dense is not None

    def dense_scaled(self, cap: int | None = None) -> np.ndarray:
        """Full pairwise scaled-distance matrix as int64, cached."""
        if self._dense is not None:
            return self._dense
        n = len(self)
        cap = caps.DENSE_CAP if cap is None else cap
        if n > cap:
            raise SizeCapExceeded(
                f"dense distance matrix for {n} points exceeds cap {cap}"
            )
        if self._dense_builder is not None:
            mat = self._dense_builder()
        else:
            mat = np.zeros((n, n), dtype=np.int64)
            for i in range(n):
                for j in range(i + 1, n):
                    v = self._scaled_fn(i, j)
                    if v >= _INT64_GUARD:
                        raise SizeCapExceeded(
                            "scaled distances exceed the int64 fast path"
                        )
                    mat[i, j] = v
                    mat[j, i] = v
        self._dense = mat
        return mat

    def gt_threshold(self, eps) -> int:
        """Integer t with ``scaled > t``  <=>  ``distance > eps`` (exact)."""
        e = as_fraction(eps) * self.denominator
        return e.numerator // e.denominator  # floor

    def lt_threshold(self, eps) -> int:
        """Integer t with ``scaled < t``  <=>  ``distance < eps`` (exact)."""
        e = as_fraction(eps) * self.denominator
        return -((-e.numerator) // e.denominator)  # ceil

    # -- truncation bookkeeping -------------------------------------------

    def require_adequate(self, horizon: int) -> None:
        """Check that word length and level cap cover the given horizon.

        Structured spaces record their truncation parameters; a horizon m
        is adequate when both are at least m + 1, which guarantees that no
        orbit or membership query up to m touches truncated data.
        """
        from .errors import TruncationExceeded

        L = self.meta.get("word_length")
        if L is not None and L < horizon + 1:
            raise TruncationExceeded(
                f"word length {L} inadequate for horizon {horizon} (need >= {horizon + 1})"
            )
        N = self.meta.get("level_cap")
        if N is not None and N < horizon + 1:
            raise TruncationExceeded(
                f"level cap {N} inadequate for horizon {horizon} (need >= {horizon + 1})"
            )


# ---------------------------------------------------------------------------
# validation


def _check_axioms_dense(space: FiniteSpace, mat: np.ndarray) -> None:
    n = len(space)
    if np.any(np.diagonal(mat) != 0):
        i = int(np.argmax(np.diagonal(mat) != 0))
        raise MetricAxiomViolation("identity", (space.labels[i],), "d(x,x) != 0")
    if np.any(mat != mat.T):
        bad = np.argwhere(mat != mat.T)[0]
        i, j = int(bad[0]), int(bad[1])
        raise MetricAxiomViolation(
            "symmetry", (space.labels[i], space.labels[j])
        )
    off = mat + np.eye(n, dtype=np.int64)  # ignore the diagonal
    if np.any(off <= 0):
        bad = np.argwhere(off <= 0)[0]
        i, j = int(bad[0]), int(bad[1])
        raise MetricAxiomViolation(
            "positivity", (space.labels[i], space.labels[j]), "d(x,y) = 0 for x != y"
        )
    viol = triangle_violation(mat)
    if viol is not None:
        i, j, k = viol
        raise MetricAxiomViolation(
            "triangle",
            (space.labels[i], space.labels[j], space.labels[k]),
            "d(i,k) > d(i,j) + d(j,k)",
        )


def _check_axioms_sampled(space: FiniteSpace, samples: int, seed: int = 0) -> None:
    n = len(space)
    rng = random.Random(seed)
    for _ in range(samples):
        i, j, k = (rng.randrange(n) for _ in range(3))
        dij = space.scaled(i, j)
        if dij != space.scaled(j, i):
            raise MetricAxiomViolation("symmetry", (space.labels[i], space.labels[j]))
        if (dij == 0) != (i == j):
            raise MetricAxiomViolation("identity", (space.labels[i], space.labels[j]))
        if space.scaled(i, k) > dij + space.scaled(j, k):
            raise MetricAxiomViolation(
                "triangle", (space.labels[i], space.labels[j], space.labels[k])
            )


def validate_space(space: FiniteSpace, mode: str = "auto") -> str:
    """Verify metric axioms; returns the mode actually used.

    ``auto`` checks every triple on spaces up to the exhaustive cap and
    falls back to seeded random triples beyond it.
    """
    n = len(space)
    if mode == "none":
        return "none"
    if mode == "auto":
        mode = "full" if n <= caps.TRIANGLE_EXHAUSTIVE_CAP else "sample"
    if mode == "full":
        _check_axioms_dense(space, space.dense_scaled(cap=max(n, caps.DENSE_CAP)))
        return "full"
    if mode == "sample":
        _check_axioms_sampled(space, caps.TRIANGLE_SAMPLES)
        return "sample"
    raise ValueError(f"unknown validation mode {mode!r}")


# ---------------------------------------------------------------------------
# generic builder


def build_finite_space(
    points: Sequence,
    metric: Callable[[object, object], object],
    validate: str = "full",
    meta: dict | None = None,
) -> FiniteSpace:
    """Build a space from explicit labels and a symmetric pair function.

    The metric may return ints, Fractions or rational strings; all values
    are brought to one common denominator. Inputs violating the metric
    axioms are rejected with the failing pair or triple.
    """
    labels = list(points)
    n = len(labels)
    if n == 0:
        raise ValueError("a space needs at least one point")
    vals: dict[tuple[int, int], Fraction] = {}
    denom = 1
    for i in range(n):
        for j in range(i, n):
            v = as_fraction(metric(labels[i], labels[j]))
            if v < 0:
                raise MetricAxiomViolation(
                    "positivity", (labels[i], labels[j]), "negative distance"
                )
            vals[(i, j)] = v
            denom = denom * v.denominator // math.gcd(denom, v.denominator)
    scaled = {ij: int(v * denom) for ij, v in vals.items()}
    diameter = max(scaled.values()) if n > 1 else 0

    table = [[0] * n for _ in range(n)]
    for (i, j), v in scaled.items():
        table[i][j] = v
        table[j][i] = v

    def scaled_fn(i: int, j: int) -> int:
        return table[i][j]

    dense = None
    if max(scaled.values(), default=0) < _INT64_GUARD:
        dense = np.array(table, dtype=np.int64)

    space = FiniteSpace(
        labels,
        denom,
        scaled_fn,
        diameter,
        meta={"builder": "generic", **(meta or {})},
        dense=dense,
    )
    validate_space(space, validate)
    return space


# ---------------------------------------------------------------------------
# structured word/depth spaces


def _sig2_int(x: int) -> int:
    """Highest power of two <= x (0 for 0): the scaled word metric."""
    return 0 if x == 0 else 1 << (x.bit_length() - 1)


def _sig2_array(x: np.ndarray) -> np.ndarray:
    # Values are < 2**L << 2**53, so the float exponent is exact.
    _, e = np.frexp(x.astype(np.float64))
    out = np.where(x > 0, np.int64(1) << np.maximum(e - 1, 0).astype(np.int64), 0)
    return out.astype(np.int64)


class _WordDepthData:
    """Packed id-indexed arrays for the structured spaces."""

    def __init__(self, kind: np.ndarray, word: np.ndarray, level: np.ndarray, L: int):
        self.kind = kind
        self.word = word
        self.level = level
        self.L = L
        self.mask = (1 << L) - 1


def _structured_arrays(family: str, L: int, n_lev: int) -> tuple[list, _WordDepthData]:
    labels: list[SpacePoint] = []
    kinds: list[int] = []
    words: list[int] = []
    levels: list[int] = []
    if family == "x":
        labels.append(SpacePoint.limit_zero())
        kinds.append(KIND_LIMIT_ZERO)
        words.append(0)
        levels.append(0)
        labels.append(SpacePoint.limit_one())
        kinds.append(KIND_LIMIT_ONE)
        words.append((1 << L) - 1)
        levels.append(0)
    elif family == "y":
        labels.append(SpacePoint.limit_zero())
        kinds.append(KIND_LIMIT_ZERO)
        words.append(0)
        levels.append(0)
    for w in range(1 << L):
        for lev in range(1, n_lev + 1):
            labels.append(SpacePoint.interior(Word.from_int(w, L), lev))
            kinds.append(KIND_INTERIOR)
            words.append(w)
            levels.append(lev)
    data = _WordDepthData(
        np.array(kinds, dtype=np.int64),
        np.array(words, dtype=np.int64),
        np.array(levels, dtype=np.int64),
        L,
    )
    return labels, data


def _lcm_range(n: int) -> int:
    out = 1
    for k in range(2, n + 1):
        out = out * k // math.gcd(out, k)
    return out


def _word_depth_space(family: str, L: int, n_lev: int, validate: str) -> FiniteSpace:
    if L < 2:
        raise ValueError("word length must be at least 2")
    if n_lev < 1:
        raise ValueError("level cap must be at least 1")
    labels, data = _structured_arrays(family, L, n_lev)
    q = _lcm_range(n_lev) ** 2
    pow_sig = 1 << (L - 1)
    denom = q * pow_sig
    if 3 * denom >= _INT64_GUARD:
        raise SizeCapExceeded(
            f"truncation parameters L={L}, N_lev={n_lev} overflow the exact int64 range"
        )

    kind, word, level = data.kind, data.word, data.level
    # inv[i] = q / level (exactly h * q, with h = 1/level and h(limit) = 0)
    inv = np.where(level > 0, q // np.maximum(level, 1), 0).astype(np.int64)
    mask = data.mask

    if family == "x":
        a0 = np.where(kind == KIND_INTERIOR, (word >> (L - 1)) & 1, 0)
        a0 = np.where(kind == KIND_LIMIT_ONE, 1, a0).astype(np.int64)
        sword = ((word << 1) & mask).astype(np.int64)

        def scaled_fn(i: int, j: int) -> int:
            t1 = int(a0[i] ^ a0[j]) * denom
            ii, ij = int(inv[i]), int(inv[j])
            t2 = abs(ii - ij) * pow_sig
            t3 = min(ii, ij) * _sig2_int(int(sword[i]) ^ int(sword[j]))
            return t1 + t2 + t3

        def dense_builder() -> np.ndarray:
            d = (a0[:, None] ^ a0[None, :]) * denom
            d = d + np.abs(inv[:, None] - inv[None, :]) * pow_sig
            d = d + np.minimum(inv[:, None], inv[None, :]) * _sig2_array(
                sword[:, None] ^ sword[None, :]
            )
            return d.astype(np.int64)

        diameter_scaled = 2 * denom  # limit-to-opposite-first-symbol at level 1
        builder_name = "example_X"
    elif family == "y":

        def scaled_fn(i: int, j: int) -> int:
            ii, ij = int(inv[i]), int(inv[j])
            t2 = abs(ii - ij) * pow_sig
            t3 = min(ii, ij) * _sig2_int(int(word[i]) ^ int(word[j]))
            return t2 + t3

        def dense_builder() -> np.ndarray:
            d = np.abs(inv[:, None] - inv[None, :]) * pow_sig
            d = d + np.minimum(inv[:, None], inv[None, :]) * _sig2_array(
                word[:, None] ^ word[None, :]
            )
            return d.astype(np.int64)

        diameter_scaled = denom  # limit point to any level-1 point
        builder_name = "example_Y"
    else:
        raise ValueError(family)

    space = FiniteSpace(
        labels,
        denom,
        scaled_fn,
        diameter_scaled,
        meta={
            "builder": builder_name,
            "word_length": L,
            "level_cap": n_lev,
            "family": family,
        },
        dense_builder=dense_builder,
    )
    space._word_depth = data  # type: ignore[attr-defined]
    validate_space(space, validate)
    return space


def build_example_x(L: int, n_lev: int, validate: str = "auto") -> FiniteSpace:
    """Two-limit word/depth space: ``2**L * n_lev`` interior points plus limits.

    The metric is ``|a0-b0| + |hx-hy| + min(hx,hy) * sigma(shift a, shift b)``
    with ``h = 1/level`` and ``h = 0`` at the limits, so a point at depth n
    whose word starts with 0 sits exactly ``1/n`` from the zero limit, and
    symmetrically for first symbol 1.
    """
    return _word_depth_space("x", L, n_lev, validate)


def build_example_y(L: int, n_lev: int, validate: str = "auto") -> FiniteSpace:
    """One-limit word/depth space; whole depth-n fibers shrink like ``1/n``."""
    return _word_depth_space("y", L, n_lev, validate)


def build_shift_space(L: int, validate: str = "auto") -> FiniteSpace:
    """All binary words of length L under the first-disagreement metric."""
    if L < 2:
        raise ValueError("word length must be at least 2")
    labels = [Word.from_int(w, L) for w in range(1 << L)]
    denom = 1 << (L - 1)

    def scaled_fn(i: int, j: int) -> int:
        return _sig2_int(i ^ j)

    def dense_builder() -> np.ndarray:
        ids = np.arange(1 << L, dtype=np.int64)
        return _sig2_array(ids[:, None] ^ ids[None, :])

    space = FiniteSpace(
        labels,
        denom,
        scaled_fn,
        denom,
        meta={"builder": "full_shift_constant", "word_length": L, "family": "shift"},
        dense_builder=dense_builder,
    )
    validate_space(space, validate)
    return space


# ---------------------------------------------------------------------------
# random spaces (test corpora)


def random_metric_space(
    n: int, seed: int, max_weight: int = 12, denominator: int = 4
) -> FiniteSpace:
    """Random rational metric on ``n`` points via shortest-path completion.

    Random symmetric positive weights are closed under min-plus, which
    repairs the triangle inequality while keeping every value an exact
    multiple of ``1/denominator``.
    """
    rng = random.Random(seed)
    w = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            w[i][j] = w[j][i] = rng.randint(1, max_weight)
    for k in range(n):
        for i in range(n):
            wik = w[i][k]
            for j in range(n):
                if wik + w[k][j] < w[i][j]:
                    w[i][j] = wik + w[k][j]
    labels = [f"p{i}" for i in range(n)]
    return build_finite_space(
        labels,
        lambda a, b: Fraction(w[int(a[1:])][int(b[1:])], denominator),
        validate="full",
        meta={"builder": "random_space", "seed": seed},
    )


# ---------------------------------------------------------------------------
# serialization


def space_to_dict(space: FiniteSpace) -> dict:
    """Structured-text description: named builder + params, or explicit table."""
    builder = space.meta.get("builder")
    if builder in ("example_X", "example_Y"):
        return {
            "builder": builder,
            "word_length": space.meta["word_length"],
            "level_cap": space.meta["level_cap"],
        }
    if builder == "full_shift_constant":
        return {"builder": builder, "word_length": space.meta["word_length"]}
    if builder == "random_space":
        return {"builder": builder, "n": len(space), "seed": space.meta["seed"]}
    n = len(space)
    return {
        "builder": "table",
        "points": [str(lab) for lab in space.labels],
        "denominator": space.denominator,
        "scaled": [[space.scaled(i, j) for j in range(n)] for i in range(n)],
    }


def space_from_dict(d: dict, validate: str = "auto") -> FiniteSpace:
    builder = d["builder"]
    if builder == "example_X":
        return build_example_x(d["word_length"], d["level_cap"], validate)
    if builder == "example_Y":
        return build_example_y(d["word_length"], d["level_cap"], validate)
    if builder == "full_shift_constant":
        return build_shift_space(d["word_length"], validate)
    if builder == "random_space":
        return random_metric_space(d["n"], d["seed"])
    if builder == "table":
        denom = d["denominator"]
        scaled = d["scaled"]
        points = list(d["points"])
        idx = {p: i for i, p in enumerate(points)}
        return build_finite_space(
            points,
            lambda a, b: Fraction(scaled[idx[a]][idx[b]], denom),
            validate="full" if validate == "auto" else validate,
        )
    raise ValueError(f"unknown builder {builder!r}")


def word_depth_arrays(space: FiniteSpace) -> _WordDepthData:
    """Packed (kind, word, level) arrays of a structured word/depth space."""
    data = getattr(space, "_word_depth", None)
    if data is None:
        raise ValueError("space was not built by a word/depth builder")
    return data


def diameter_check(space: FiniteSpace, samples: int = 2048, seed: int = 1) -> bool:
    """Spot-check that no sampled pair exceeds the declared diameter."""
    n = len(space)
    if n == 1:
        return space.diameter == 0
    rng = random.Random(seed)
    top = int(space.diameter * space.denominator)
    for _ in range(min(samples, n * n)):
        i, j = rng.randrange(n), rng.randrange(n)
        if space.scaled(i, j) > top:
            return False
    return True
