import numpy as np
import pytest

from maxstable.lattice import (
    FieldSample,
    FieldTag,
    LatticeOrder,
    Window,
    add,
    order_compare,
    shift_field,
    window_points,
)

LEX = LatticeOrder.LEXICOGRAPHIC
REV = LatticeOrder.REVERSED_LEXICOGRAPHIC


class TestOrderCompare:
    def test_reflexivity(self):
        assert order_compare(LEX, (0,), (0,)) == 0

    def test_first_coordinate_decides(self):
        assert order_compare(LEX, (0, 1), (1, 0)) == -1

    def test_translation_invariance_example(self):
        a, b, h = (0, 1), (1, 0), (5, -3)
        assert order_compare(LEX, add(a, h), add(b, h)) == -1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            order_compare(LEX, (0,), (0, 1))

    def test_totality_and_antisymmetry_random(self, rng):
        pts = rng.integers(-50, 50, size=(10_000, 2, 3))
        for order in (LEX, REV):
            for a, b in pts:
                a, b = tuple(a), tuple(b)
                c = order_compare(order, a, b)
                assert c in (-1, 0, 1)
                assert (c == 0) == (a == b)
                assert order_compare(order, b, a) == -c

    def test_translation_invariance_random(self, rng):
        triples = rng.integers(-50, 50, size=(10_000, 3, 2))
        for order in (LEX, REV):
            for a, b, h in triples:
                a, b, h = tuple(a), tuple(b), tuple(h)
                assert order_compare(order, a, b) == order_compare(
                    order, add(a, h), add(b, h)
                )

    def test_reversed_is_reversal(self):
        assert order_compare(REV, (0, 1), (1, 0)) == 1


class TestWindow:
    def test_empty_window_rejected(self):
        with pytest.raises(ValueError):
            Window((2,), (1,))

    def test_point_count(self):
        w = Window((-1, 0), (1, 2))
        assert w.npoints == 9
        assert len(window_points(w)) == 9

    def test_enumeration_1d(self):
        w = Window((0,), (2,))
        assert [tuple(p) for p in window_points(w)] == [(0,), (1,), (2,)]

    def test_enumeration_2d_lexicographic(self):
        w = Window((0, 0), (1, 1))
        assert [tuple(p) for p in window_points(w, LEX)] == [
            (0, 0),
            (0, 1),
            (1, 0),
            (1, 1),
        ]

    def test_enumeration_reversed(self):
        w = Window((0, 0), (1, 1))
        assert [tuple(p) for p in window_points(w, REV)] == [
            (1, 1),
            (1, 0),
            (0, 1),
            (0, 0),
        ]

    def test_unique_enumeration(self):
        w = Window((-2, -1), (1, 3))
        pts = {tuple(p) for p in window_points(w)}
        assert len(pts) == w.npoints

    def test_shell_mask(self):
        w = Window((-1,), (1,))
        assert list(w.shell_mask) == [True, False, True]


class TestShiftField:
    def _sample(self):
        w = Window((0,), (1,))
        return FieldSample(w, np.array([1.0, 2.0]), FieldTag.Z)

    def test_identity_shift(self):
        f = self._sample()
        g = shift_field(f, (0,))
        assert g.window == f.window
        assert np.array_equal(g.values, f.values)

    def test_direct_substitution(self):
        f = self._sample()
        g = shift_field(f, (1,))
        assert dict(g.items()) == {(1,): 1.0, (2,): 2.0}

    def test_inverse_shift(self):
        f = self._sample()
        g = shift_field(shift_field(f, (3,)), (-3,))
        assert g.window == f.window
        assert np.array_equal(g.values, f.values)

    def test_additive_composition(self, rng):
        w = Window((-2, -2), (2, 2))
        for _ in range(50):
            f = FieldSample(w, rng.random(w.npoints), FieldTag.Z)
            g, h = tuple(rng.integers(-4, 5, 2)), tuple(rng.integers(-4, 5, 2))
            once = shift_field(shift_field(f, h), g)
            both = shift_field(f, add(g, h))
            assert once.window == both.window
            assert np.array_equal(once.values, both.values)


class TestFieldSample:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            FieldSample(Window((0,), (2,)), np.ones(2), FieldTag.Z)

    def test_negative_values_rejected(self):
        with pytest.raises(ValueError):
            FieldSample(Window((0,), (0,)), np.array([-1.0]), FieldTag.Z)

    def test_theta_invariant_enforced_by_check(self):
        w = Window((-1,), (1,))
        good = FieldSample(w, np.array([0.5, 1.0, 0.2]), FieldTag.THETA)
        good.check_tag_invariant()
        bad = FieldSample(w, np.array([0.5, 1.01, 0.2]), FieldTag.THETA)
        with pytest.raises(AssertionError):
            bad.check_tag_invariant()

    def test_y_invariant(self):
        w = Window((0,), (0,))
        with pytest.raises(AssertionError):
            FieldSample(w, np.array([1.0]), FieldTag.Y).check_tag_invariant()
