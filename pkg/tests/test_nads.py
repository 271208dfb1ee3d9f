import itertools
from fractions import Fraction

import pytest

from nadent.errors import SizeCapExceeded, TruncationExceeded
from nadent.nads import (
    FactorMap,
    bowen_distance,
    build_system,
    compose,
    example_f,
    example_factor,
    example_factor_map,
    example_g,
    example_x_system,
    example_y_system,
    fibers,
    full_shift_system,
    identity_system,
    product_system,
    random_system,
    verify_factor,
)
from nadent.space import SpacePoint, Word, build_shift_space


class TestCompose:
    def test_zero_length_is_identity(self):
        sys_ = random_system(5, seed=1)
        for i in (1, 3):
            for x in range(5):
                assert compose(sys_, i, 0, x) == x

    def test_order_first_map_first(self):
        # compose(1, 2, x) must be map2(map1(x))
        sys_ = random_system(6, seed=2)
        for x in range(6):
            expected = sys_.maps.rule(2, sys_.maps.rule(1, x))
            assert compose(sys_, 1, 2, x) == expected

    def test_depth_gated_shift_from_level_one(self):
        sys_ = example_x_system(4, 6)
        sp = sys_.space
        a = Word("1011")
        x = sp.index(SpacePoint.interior(a, 1))
        out = compose(sys_, 1, 3, x)
        assert sp.labels[out] == SpacePoint.interior(Word("1000"), 4)

    def test_cocycle(self):
        sys_ = example_x_system(3, 6)
        pts = range(0, len(sys_.space), 5)
        for x, i, n, m in itertools.product(pts, (1, 2), (0, 1, 2), (0, 1, 2)):
            assert compose(sys_, i, n + m, x) == compose(
                sys_, i + n, m, compose(sys_, i, n, x)
            )


class TestExampleMaps:
    def test_shallow_point_moves(self):
        out = example_f(3, SpacePoint.interior(Word("1011"), 1))
        assert out == SpacePoint.interior(Word("0110"), 2)

    def test_deep_point_fixed(self):
        p = SpacePoint.interior(Word("1011"), 5)
        assert example_f(2, p) == p

    def test_limits_fixed(self):
        assert example_f(7, SpacePoint.limit_zero()) == SpacePoint.limit_zero()
        assert example_f(7, SpacePoint.limit_one()) == SpacePoint.limit_one()

    def test_identity_above_index(self):
        # the n-th map only moves levels up to n
        for n in (1, 2, 4):
            p = SpacePoint.interior(Word("0101"), n + 1)
            assert example_f(n, p) == p
            q = SpacePoint.interior(Word("0101"), n)
            assert example_f(n, q) != q

    def test_truncation_overflow_raises(self):
        with pytest.raises(TruncationExceeded):
            example_f(9, SpacePoint.interior(Word("0101"), 9), level_cap=9)

    def test_system_rule_matches_label_rule(self):
        sys_ = example_x_system(3, 4)
        sp = sys_.space
        for n in (1, 2, 3):
            for x in range(len(sp)):
                expected = example_f(n, sp.labels[x], level_cap=4)
                assert sp.labels[sys_.step(n, x)] == expected

    def test_restriction_to_one_limit_space(self):
        sys_ = example_y_system(3, 4)
        sp = sys_.space
        for n in (1, 2):
            for x in range(len(sp)):
                expected = example_g(n, sp.labels[x], level_cap=4)
                assert sp.labels[sys_.step(n, x)] == expected

    def test_restriction_rejects_two_limit_point(self):
        with pytest.raises(ValueError):
            example_g(1, SpacePoint.limit_one())


class TestBowen:
    def test_horizon_one_is_the_metric(self):
        sys_ = random_system(6, seed=3)
        for x in range(6):
            for y in range(6):
                assert bowen_distance(sys_, 1, x, y) == sys_.space.distance(x, y)

    def test_zero_on_diagonal(self):
        sys_ = random_system(5, seed=4)
        assert all(bowen_distance(sys_, 4, x, x) == 0 for x in range(5))

    def test_monotone_in_horizon(self):
        sys_ = example_x_system(3, 6)
        pts = list(range(0, len(sys_.space), 3))
        for x, y in itertools.combinations(pts, 2):
            prev = Fraction(0)
            for n in range(1, 6):
                cur = bowen_distance(sys_, n, x, y)
                assert cur >= prev
                prev = cur

    def test_metric_axioms_at_each_horizon(self):
        sys_ = random_system(6, seed=5)
        for n in (1, 2, 3):
            for x, y, z in itertools.product(range(6), repeat=3):
                dxy = bowen_distance(sys_, n, x, y)
                assert dxy == bowen_distance(sys_, n, y, x)
                assert (dxy == 0) == (x == y)
                assert bowen_distance(sys_, n, x, z) <= dxy + bowen_distance(
                    sys_, n, y, z
                )

    def test_matrix_matches_scalar(self):
        sys_ = random_system(7, seed=6)
        mat = sys_.bowen_matrix(3)
        for x in range(7):
            for y in range(7):
                assert (
                    Fraction(int(mat[x, y]), sys_.space.denominator)
                    == bowen_distance(sys_, 3, x, y)
                )


class TestProduct:
    def test_k1_is_isometric(self):
        sys_ = random_system(5, seed=7)
        prod = product_system(sys_, 1)
        for x in range(5):
            for y in range(5):
                assert prod.space.distance(x, y) == sys_.space.distance(x, y)
            for n in (1, 2):
                assert prod.step(n, x) == sys_.step(n, x)

    def test_diagonal_distance(self):
        sys_ = random_system(4, seed=8)
        prod = product_system(sys_, 2)
        lab = sys_.space.labels
        for x in range(4):
            for y in range(4):
                i = prod.space.index((lab[x], lab[x]))
                j = prod.space.index((lab[y], lab[y]))
                assert prod.space.distance(i, j) == sys_.space.distance(x, y)

    def test_bowen_is_max_over_coordinates(self):
        sys_ = random_system(4, seed=9)
        prod = product_system(sys_, 2)
        lab = sys_.space.labels
        for n in (1, 2, 3):
            for x1, x2, y1, y2 in itertools.product(range(4), repeat=4):
                i = prod.space.index((lab[x1], lab[x2]))
                j = prod.space.index((lab[y1], lab[y2]))
                expected = max(
                    bowen_distance(sys_, n, x1, y1), bowen_distance(sys_, n, x2, y2)
                )
                assert bowen_distance(prod, n, i, j) == expected

    def test_size_cap(self):
        sys_ = random_system(8, seed=10)
        with pytest.raises(SizeCapExceeded):
            product_system(sys_, 3, size_cap=100)


class TestFactor:
    def test_limit_gluing(self):
        assert example_factor(SpacePoint.limit_one()) == SpacePoint.limit_zero()
        p = SpacePoint.interior(Word("010"), 2)
        assert example_factor(p) == p

    def test_example_factor_verifies(self):
        fm = example_factor_map(4, 6)
        rep = verify_factor(fm, 5, fiber_bound=2)
        assert rep.surjective
        assert rep.first_violation is None and rep.equivariant_to == 5
        assert rep.max_fiber == 2 and rep.finite_to_one

    def test_fiber_structure(self):
        fm = example_factor_map(3, 3)
        fib = fibers(fm)
        sizes = sorted(len(v) for v in fib.values())
        assert sizes.count(2) == 1 and set(sizes) == {1, 2}

    def test_identity_factor(self):
        sys_ = example_x_system(3, 3)
        fm = FactorMap(sys_, sys_, tuple(range(len(sys_.space))))
        rep = verify_factor(fm, 2)
        assert rep.surjective and rep.max_fiber == 1 and rep.first_violation is None

    def test_constant_map_fails_surjectivity(self):
        dom = random_system(5, seed=11)
        cod = random_system(2, seed=12)
        fm = FactorMap(dom, cod, (0, 0, 0, 0, 0))
        rep = verify_factor(fm, 1)
        assert not rep.surjective

    def test_non_equivariant_map_reports_witness(self):
        dom = full_shift_system(2)
        cod = full_shift_system(2)
        # swap two points to break equivariance
        pi = [0, 1, 3, 2]
        rep = verify_factor(FactorMap(dom, cod, tuple(pi)), 3)
        assert rep.first_violation is not None
        n, label = rep.first_violation
        assert n >= 1


class TestOrbitRows:
    def test_rows_agree_with_compose(self):
        sys_ = example_y_system(3, 5)
        rows = sys_.orbit_rows(4)
        for j in range(4):
            for x in range(0, len(sys_.space), 7):
                assert int(rows[j][x]) == compose(sys_, 1, j, x)

    def test_identity_system(self):
        sp = build_shift_space(3)
        sys_ = identity_system(sp)
        rows = sys_.orbit_rows(3)
        assert all(int(rows[j][x]) == x for j in range(3) for x in range(8))

    def test_build_system_names(self):
        assert build_system("example_X", word_length=2, level_cap=2).name == "example_X"
        assert build_system("example_Y", word_length=2, level_cap=2).name == "example_Y"
        assert build_system("full_shift_constant", word_length=3).name == "full_shift_constant"
        assert build_system("random_maps", n=4, seed=0).name == "random_maps(0)"
        with pytest.raises(ValueError):
            build_system("nope")
