import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nadent.errors import NotACover, SizeCapExceeded
from nadent.entropy import (
    OpenCover,
    cover_growth,
    first_symbol_cover,
    growth_table,
    join,
    joined_preimages,
    max_separated,
    min_spanning,
    minimal_subcover,
    minimal_subcover_count,
    preimage_cover,
    separated_growth,
    stable_word_cover,
    trivial_cover,
    verify_separated,
)
from nadent.nads import (
    example_x_system,
    example_y_system,
    identity_system,
    random_system,
)
from nadent.space import SpacePoint, Word, build_shift_space, random_metric_space

from _oracles import brute_minimal_subcover


def small_cover(space, *id_sets):
    return OpenCover.from_id_sets(space, id_sets)


class TestOpenCover:
    def test_rejects_non_cover(self):
        sp = build_shift_space(2)
        with pytest.raises(NotACover):
            small_cover(sp, [0, 1], [2])

    def test_partition_detection(self):
        sp = build_shift_space(2)
        part = small_cover(sp, [0, 1], [2, 3])
        assert part.is_partition()
        overlapping = small_cover(sp, [0, 1, 2], [2, 3])
        assert not overlapping.is_partition()


class TestPreimage:
    def test_j_zero_is_identity(self):
        sys_ = random_system(5, seed=1)
        cov = small_cover(sys_.space, [0, 1, 2], [2, 3, 4])
        assert preimage_cover(sys_, cov, 0) is cov

    def test_identity_system_preimage_fixed(self):
        sys_ = identity_system(build_shift_space(3))
        cov = small_cover(sys_.space, range(4), range(4, 8))
        for j in (1, 2, 3):
            pre = preimage_cover(sys_, cov, j)
            assert np.array_equal(pre.masks, cov.masks)

    def test_preimage_membership_definition(self):
        sys_ = example_x_system(4, 6)
        U = first_symbol_cover(sys_.space)
        for j in (1, 2, 3):
            pre = preimage_cover(sys_, U, j)
            for x in range(0, len(sys_.space), 11):
                img = sys_.compose(1, j, x)
                for e in range(2):
                    assert pre.masks[e, x] == U.masks[e, img]

    def test_first_symbol_preimage_structure(self):
        # At step m the membership of an interior point (word b, level i)
        # in the 0-cell is decided by symbol b[max(0, m - i + 1)].
        sys_ = example_x_system(5, 6)
        sp = sys_.space
        U = first_symbol_cover(sp)
        for m in (1, 2, 3):
            pre = preimage_cover(sys_, U, m)
            for w in range(0, 32, 3):
                for lev in (1, 2, 3, 4):
                    x = sp.index(SpacePoint.interior(Word.from_int(w, 5), lev))
                    sym = Word.from_int(w, 5)[max(0, m - lev + 1)]
                    assert pre.masks[0, x] == (sym == 0)


class TestJoin:
    def test_join_single(self):
        sp = build_shift_space(2)
        cov = small_cover(sp, [0, 1], [2, 3])
        assert join([cov]) is cov

    def test_join_with_trivial(self):
        sp = build_shift_space(2)
        cov = small_cover(sp, [0, 1], [1, 2, 3])
        joined = join([cov, trivial_cover(sp)])
        got = {tuple(np.nonzero(row)[0]) for row in joined.masks}
        assert got == {(0, 1), (1, 2, 3)}

    def test_two_partitions_four_cells(self):
        sp = build_shift_space(2)
        a = small_cover(sp, [0, 1], [2, 3])
        b = small_cover(sp, [0, 2], [1, 3])
        joined = join([a, b])
        assert len(joined) == 4
        assert all(row.sum() == 1 for row in joined.masks)

    def test_general_join_matches_partition_path(self):
        sp = random_metric_space(6, seed=2)
        a = small_cover(sp, [0, 1, 2], [3, 4, 5])
        b = small_cover(sp, [0, 3], [1, 2, 4, 5])
        joined = join([a, b])
        # same cells through the generic DFS: force it with an overlap
        c = small_cover(sp, [0, 1, 2], [2, 3, 4, 5])
        joined2 = join([c, b])
        cells = {tuple(np.nonzero(r)[0]) for r in joined.masks}
        assert cells == {(0,), (3,), (1, 2), (4, 5)}
        cells2 = {tuple(np.nonzero(r)[0]) for r in joined2.masks}
        assert cells2 == {(0,), (1, 2), (3,), (2, 4, 5)}


class TestMinimalSubcover:
    def test_partition_count(self):
        sp = build_shift_space(3)
        cov = small_cover(sp, range(2), range(2, 5), range(5, 8))
        res = minimal_subcover_count(cov)
        assert res.count == 3 and res.exact and res.method == "partition"

    def test_whole_space_element_wins(self):
        sp = build_shift_space(2)
        cov = small_cover(sp, range(4), [1, 2])
        res = minimal_subcover_count(cov)
        assert res.count == 1 and res.exact

    def test_not_a_cover(self):
        sp = build_shift_space(2)
        masks = np.zeros((1, 4), dtype=bool)
        masks[0, :2] = True
        with pytest.raises(NotACover):
            minimal_subcover_count(OpenCover(sp, masks, check=False))

    @given(st.integers(0, 400))
    @settings(max_examples=40, deadline=None)
    def test_exact_matches_brute_force(self, seed):
        import random as _r

        rng = _r.Random(seed)
        n = rng.randint(3, 9)
        m = rng.randint(2, 7)
        masks = []
        for _ in range(m):
            masks.append([rng.random() < 0.5 for _ in range(n)])
        arr = np.array(masks, dtype=bool)
        if not arr.any(axis=0).all():
            arr[0] |= ~arr.any(axis=0)
        sp = random_metric_space(n, seed=seed)
        cov = OpenCover(sp, arr)
        res, sel = minimal_subcover(cov)
        ints = [int.from_bytes(np.packbits(r, bitorder="little").tobytes(), "little") for r in arr]
        assert res.count == brute_minimal_subcover(ints, (1 << n) - 1)
        chosen = arr[sel]
        assert chosen.any(axis=0).all() and len(sel) == res.count

    def test_inexact_beyond_cap_brackets(self):
        sp = random_metric_space(9, seed=5)
        rng = np.random.default_rng(3)
        arr = rng.random((6, 9)) < 0.45
        arr[0] |= ~arr.any(axis=0)
        cov = OpenCover(sp, arr)
        exact = minimal_subcover_count(cov).count
        bounded = minimal_subcover_count(cov, exact_cap=4)
        assert not bounded.exact
        assert bounded.lower <= exact <= bounded.upper == bounded.count

    def test_submultiplicative_under_join(self):
        sp = random_metric_space(7, seed=6)
        rng = np.random.default_rng(8)
        for _ in range(10):
            a = rng.random((3, 7)) < 0.6
            b = rng.random((3, 7)) < 0.6
            a[0] |= ~a.any(axis=0)
            b[0] |= ~b.any(axis=0)
            ca, cb = OpenCover(sp, a), OpenCover(sp, b)
            nj = minimal_subcover_count(join([ca, cb])).count
            assert nj <= minimal_subcover_count(ca).count * minimal_subcover_count(cb).count

    def test_refinement_needs_no_fewer(self):
        sp = random_metric_space(8, seed=7)
        rng = np.random.default_rng(9)
        coarse = rng.random((3, 8)) < 0.7
        coarse[0] |= ~coarse.any(axis=0)
        cc = OpenCover(sp, coarse)
        fine = join([cc, small_cover(sp, range(4), range(4, 8))])
        assert (
            minimal_subcover_count(fine).count >= minimal_subcover_count(cc).count
        )


class TestCounters:
    def test_eps_above_diameter(self):
        sys_ = random_system(6, seed=8)
        diam = sys_.space.diameter
        s = max_separated(sys_, 2, diam + 1)
        r = min_spanning(sys_, 2, diam + 1)
        assert s.count == 1 and r.count == 1

    def test_eps_below_min_distance(self):
        sys_ = random_system(6, seed=9)
        mat = sys_.bowen_matrix(2)
        m = mat[mat > 0].min()
        eps = Fraction(int(m), sys_.space.denominator * 2)
        assert max_separated(sys_, 2, eps).count == 6
        assert min_spanning(sys_, 2, eps).count == 6

    def test_greedy_bounds_exact(self):
        for seed in range(12):
            sys_ = random_system(7, seed=seed)
            for eps in (Fraction(1, 2), Fraction(5, 4), Fraction(9, 4)):
                se = max_separated(sys_, 2, eps, mode="exact", exact_cap=64)
                sg = max_separated(sys_, 2, eps, mode="greedy")
                assert sg.count <= se.count
                re = min_spanning(sys_, 2, eps, mode="exact", exact_cap=64)
                rg = min_spanning(sys_, 2, eps, mode="greedy")
                assert rg.count >= re.count

    def test_monotonicity_in_eps_and_horizon(self):
        sys_ = random_system(6, seed=13)
        eps_grid = [Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2)]
        for n in (1, 2, 3):
            counts = [max_separated(sys_, n, e, exact_cap=64).count for e in eps_grid]
            assert counts == sorted(counts, reverse=True)
            spans = [min_spanning(sys_, n, e, exact_cap=64).count for e in eps_grid]
            assert spans == sorted(spans, reverse=True)
        for e in eps_grid:
            counts = [max_separated(sys_, n, e, exact_cap=64).count for n in (1, 2, 3)]
            assert counts == sorted(counts)

    def test_separated_witness_is_separated(self):
        sys_ = example_x_system(4, 5)
        res = max_separated(sys_, 3, Fraction(1, 2), mode="greedy")
        assert verify_separated(sys_, 3, Fraction(1, 2), res.witness)

    def test_witness_pattern_points_on_two_limit_system(self):
        # one depth-1 point per word prefix is pairwise separated beyond 1/2
        m = 4
        sys_ = example_x_system(6, 6)
        sp = sys_.space
        ids = [
            sp.index(SpacePoint.interior(Word.from_int(w << 2, 6), 1))
            for w in range(2**m)
        ]
        assert verify_separated(sys_, m, Fraction(1, 2), ids)

    def test_exact_cap_raises(self):
        sys_ = example_x_system(4, 4)  # 66 points
        with pytest.raises(SizeCapExceeded):
            max_separated(sys_, 2, Fraction(1, 3), mode="exact", exact_cap=16)


class TestGrowthTable:
    def test_constant_counts_zero_slopes(self):
        t = growth_table([(n, 7) for n in range(1, 8)])
        assert t.slope_fit == 0.0 and t.slope_tail == 0.0

    def test_doubling_counts_log2_slopes(self):
        t = growth_table([(n, 2**n) for n in range(1, 11)])
        assert abs(t.slope_fit - math.log(2)) < 1e-12
        assert abs(t.slope_tail - math.log(2)) < 1e-12

    def test_csv_shape(self):
        t = growth_table([(1, 2), (2, 4)])
        text = t.to_csv_text()
        lines = text.strip().split("\n")
        assert lines[0] == "n,count,log_count,exact_flag"
        assert lines[1].startswith("1,2,")

    def test_requires_increasing_horizons(self):
        with pytest.raises(ValueError):
            growth_table([(2, 1), (2, 2)])


class TestExampleCounts:
    def test_two_limit_cover_counts_small(self):
        sys_ = example_x_system(6, 6)
        U = first_symbol_cover(sys_.space)
        table = cover_growth(sys_, U, range(1, 5))
        assert [r.count for r in table.rows] == [2, 4, 8, 16]
        assert all(r.exact for r in table.rows)

    def test_one_limit_stabilization_small(self):
        sys_ = example_y_system(7, 7)
        V = stable_word_cover(sys_.space, 2, 2)
        table = cover_growth(sys_, V, range(1, 7))
        counts = [r.count for r in table.rows]
        assert counts[2] == counts[3] == counts[4] == counts[5]
        assert table.slope_tail == 0.0

    def test_joined_preimages_partition_count(self):
        sys_ = example_x_system(6, 6)
        U = first_symbol_cover(sys_.space)
        joined = joined_preimages(sys_, U, 3)
        res = minimal_subcover_count(joined)
        assert res.count == 8 and res.method == "partition"

    def test_separated_growth_on_constant_shift(self):
        from nadent.nads import full_shift_system

        sys_ = full_shift_system(7)
        table = separated_growth(sys_, range(2, 6), Fraction(1, 4), mode="greedy")
        assert [r.count for r in table.rows] == [8, 16, 32, 64]
