from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nadent.errors import LengthMismatch, MetricAxiomViolation
from nadent.space import (
    SpacePoint,
    Word,
    build_example_x,
    build_example_y,
    build_finite_space,
    build_shift_space,
    diameter_check,
    random_metric_space,
    sigma_metric,
    space_from_dict,
    space_to_dict,
    validate_space,
)


def bits(value: int, length: int) -> Word:
    return Word.from_int(value, length)


class TestSigmaMetric:
    def test_equal_words(self):
        assert sigma_metric(Word("0110"), Word("0110")) == 0

    def test_first_symbol_disagreement(self):
        assert sigma_metric(Word("0111"), Word("1000")) == 1

    def test_inner_disagreement(self):
        # disagreement first appears at index 3
        assert sigma_metric(Word("00110"), Word("00100")) == Fraction(1, 8)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            sigma_metric(Word("01"), Word("011"))

    @given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
    def test_ultrametric(self, a, b, c):
        wa, wb, wc = bits(a, 8), bits(b, 8), bits(c, 8)
        assert sigma_metric(wa, wc) <= max(sigma_metric(wa, wb), sigma_metric(wb, wc))

    @given(st.integers(0, 1023), st.integers(0, 1023))
    def test_range_is_dyadic(self, a, b):
        d = sigma_metric(bits(a, 10), bits(b, 10))
        assert d == 0 or d.numerator == 1 and (d.denominator & (d.denominator - 1)) == 0


class TestWord:
    def test_shift_drops_first_and_pads(self):
        assert Word("1011").shift() == Word("0110")

    def test_rejects_bad_symbols(self):
        with pytest.raises(ValueError):
            Word("01a1")

    def test_interior_needs_level(self):
        with pytest.raises(ValueError):
            SpacePoint.interior(Word("01"), 0)


class TestBuildFiniteSpace:
    def test_single_point(self):
        sp = build_finite_space(["o"], lambda a, b: 0)
        assert len(sp) == 1 and sp.diameter == 0

    def test_triangle_violation_rejected(self):
        def metric(a, b):
            if a == b:
                return 0
            pair = {a, b}
            return 3 if pair == {"a", "c"} else 1

        with pytest.raises(MetricAxiomViolation) as exc:
            build_finite_space(["a", "b", "c"], metric)
        assert exc.value.axiom == "triangle"

    def test_zero_off_diagonal_rejected(self):
        with pytest.raises(MetricAxiomViolation):
            build_finite_space(["a", "b"], lambda a, b: 0)

    def test_words_with_sigma_metric(self):
        # exhaustive axiom check at L=4 happens inside validate="full"
        words = [bits(v, 4) for v in range(16)]
        sp = build_finite_space(words, sigma_metric, validate="full")
        assert sp.diameter == 1

    def test_threshold_helpers_are_exact(self):
        sp = build_shift_space(3)
        # distance values are {0, 1/4, 1/2, 1}; check strictness at a tie
        t = sp.gt_threshold(Fraction(1, 4))
        a, b = 0, 1  # words 000, 001 differ at index 2 -> exactly 1/4
        assert not sp.scaled(a, b) > t
        t2 = sp.gt_threshold(Fraction(1, 5))
        assert sp.scaled(a, b) > t2


class TestExampleSpaces:
    def test_x_point_count(self):
        sp = build_example_x(2, 1)
        assert len(sp) == 6  # 4 interior + 2 limits

    def test_y_point_count(self):
        sp = build_example_y(2, 1)
        assert len(sp) == 5

    def test_x_limit_distances(self):
        sp = build_example_x(4, 5)
        z = sp.index(SpacePoint.limit_zero())
        o = sp.index(SpacePoint.limit_one())
        for n in (1, 2, 5):
            i = sp.index(SpacePoint.interior(Word("0110"), n))
            assert sp.distance(i, z) == Fraction(1, n)
            j = sp.index(SpacePoint.interior(Word("1110"), n))
            assert sp.distance(j, o) == Fraction(1, n)
            assert sp.distance(i, j) >= 1
        assert sp.distance(z, o) >= 1

    def test_y_limit_distance_is_level(self):
        sp = build_example_y(3, 6)
        z = sp.index(SpacePoint.limit_zero())
        for n in (1, 3, 6):
            for w in (0, 5):
                i = sp.index(SpacePoint.interior(bits(w, 3), n))
                assert sp.distance(i, z) == Fraction(1, n)

    def test_y_fiber_diameter_shrinks(self):
        sp = build_example_y(3, 8)
        prev = None
        for n in range(1, 9):
            ids = [sp.index(SpacePoint.interior(bits(w, 3), n)) for w in range(8)]
            diam = max(sp.distance(a, b) for a in ids for b in ids)
            assert diam <= Fraction(1, n)
            if prev is not None:
                assert diam <= prev
            prev = diam

    @pytest.mark.parametrize("family,builder", [("x", build_example_x), ("y", build_example_y)])
    def test_axioms_exhaustive_small(self, family, builder):
        assert validate_space(builder(3, 3, validate="none"), "full") == "full"

    def test_sampled_validation_on_larger_space(self):
        sp = build_example_x(7, 7, validate="none")
        assert validate_space(sp, "auto") == "sample"

    def test_declared_diameters(self):
        assert diameter_check(build_example_x(4, 4))
        assert diameter_check(build_example_y(4, 4))
        assert diameter_check(build_shift_space(6))


class TestSerialization:
    @pytest.mark.parametrize(
        "make",
        [
            lambda: build_example_x(3, 2),
            lambda: build_example_y(3, 2),
            lambda: build_shift_space(3),
            lambda: random_metric_space(5, seed=9),
        ],
    )
    def test_roundtrip(self, make):
        sp = make()
        desc = space_to_dict(sp)
        back = space_from_dict(desc)
        assert len(back) == len(sp)
        assert back.denominator == sp.denominator
        for i in range(len(sp)):
            for j in range(len(sp)):
                assert back.scaled(i, j) == sp.scaled(i, j)

    def test_generic_table_roundtrip(self):
        sp = build_finite_space(["a", "b", "c"], lambda a, b: 0 if a == b else 1)
        back = space_from_dict(space_to_dict(sp))
        assert back.distance(0, 2) == 1


class TestRandomSpaces:
    @given(st.integers(2, 9), st.integers(0, 50))
    @settings(max_examples=25, deadline=None)
    def test_random_metric_is_valid(self, n, seed):
        sp = random_metric_space(n, seed)
        assert validate_space(sp, "full") == "full"
