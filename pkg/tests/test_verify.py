import math

import numpy as np
import pytest

from maxstable import (
    BrownResnick,
    Independent,
    Sequence,
    TestFunctional,
    Variogram,
    Window,
    broken_power_suite,
    check_tilt_identity,
    check_tsf_theta,
    check_tsf_z,
    check_y_fidi,
    jittered_theta,
    standard_suite,
)
BR1 = BrownResnick(Variogram.power())
SEQ31 = Sequence({0: 3.0, 1: 1.0})
BOX = Window((-2,), (2,))


class TestFunctionals:
    def _samples(self, rng):
        return BR1.sample_theta(Window((-3,), (3,)), 500, rng)

    @pytest.mark.parametrize(
        "func",
        [
            TestFunctional.coordinate_ratio((0,), (1,)),
            TestFunctional.exceed_indicator((1,), 0.8),
            TestFunctional.anchor_indicator((0,), BOX),
        ],
        ids=["ratio", "exceed", "anchor"],
    )
    def test_zero_homogeneous_exact(self, func, rng):
        w = Window((-3,), (3,))
        batch = self._samples(rng)
        base = func.evaluate(batch, w)
        for c in (0.1, 1.0, 10.0):
            scaled = func.evaluate(c * batch, w)
            if func.kind == "coordinate_ratio":
                # scale invariance up to the last ulp of the division
                assert np.allclose(scaled, base, rtol=1e-12, atol=0)
            else:
                assert np.array_equal(scaled, base)

    def test_bounded(self, rng):
        w = Window((-3,), (3,))
        batch = self._samples(rng)
        for func in (
            TestFunctional.coordinate_ratio((0,), (1,)),
            TestFunctional.exceed_indicator((1,), 1.5),
            TestFunctional.anchor_indicator((1,), BOX),
        ):
            vals = func.evaluate(batch, w)
            assert np.all((0 <= vals) & (vals <= 1))

    def test_anchor_target_must_be_in_box(self):
        with pytest.raises(Exception):
            TestFunctional.anchor_indicator((5,), BOX)

    def test_window_too_small(self, rng):
        func = TestFunctional.coordinate_ratio((0,), (1,))
        with pytest.raises(Exception):
            check_tsf_z(BR1, (1,), func, 1000, rng, window=Window((0,), (1,)))


class TestTsfZ:
    def test_trivial_h_zero(self, rng):
        func = TestFunctional.coordinate_ratio((0,), (1,))
        rep = check_tsf_z(BR1, (0,), func, 5000, rng)
        assert rep.z_score == 0.0
        assert rep.passed

    def test_constructed_z_closed_form(self, rng):
        # independent-model spectral construction: both sides enumerable
        from maxstable import FromTail

        model = FromTail(Independent(), margin=4)
        func = TestFunctional.anchor_indicator((0,), BOX)
        rep = check_tsf_z(model, (1,), func, 60_000, rng)
        assert rep.passed

    def test_br_pairs_pass(self, rng):
        for h in ((1,), (2,)):
            func = TestFunctional.coordinate_ratio((0,), (1,))
            rep = check_tsf_z(BR1, h, func, 50_000, rng)
            assert rep.passed, rep.label


class TestTsfTheta:
    def test_trivial_h_zero(self, rng):
        func = TestFunctional.exceed_indicator((1,), 1.0)
        rep = check_tsf_theta(SEQ31, (0,), func, 5000, rng)
        assert rep.z_score == 0.0
        assert rep.passed

    def test_sequence_hand_enumeration(self, rng):
        # c = (3,1), h = 1, F = f(0)/(f(0)+f(1)): both sides equal 3/16
        func = TestFunctional.coordinate_ratio((0,), (1,))
        rep = check_tsf_theta(SEQ31, (1,), func, 100_000, rng)
        assert rep.passed
        assert abs(rep.lhs.estimate - 3.0 / 16.0) < 4 * rep.lhs.stderr
        assert abs(rep.rhs.estimate - 3.0 / 16.0) < 4 * rep.rhs.stderr

    def test_alpha_two_sequence(self, rng):
        model = Sequence({0: 2.0, 1: 1.0}, alpha=2.0)
        func = TestFunctional.coordinate_ratio((0,), (1,))
        rep = check_tsf_theta(model, (1,), func, 80_000, rng)
        assert rep.passed, (rep.lhs.estimate, rep.rhs.estimate)

    def test_product_and_mixture_models_pass(self, rng):
        from maxstable import Independent, Mixture, Product

        func2 = TestFunctional.coordinate_ratio((0, 0), (1, 0))
        prod = Product(SEQ31, Sequence({0: 1.0, 1: 1.0}))
        rep = check_tsf_theta(prod, (1, -1), func2, 50_000, rng)
        assert rep.passed, rep.label
        mix = Mixture(0.4, SEQ31, Independent())
        func1 = TestFunctional.coordinate_ratio((0,), (1,))
        rep = check_tsf_theta(mix, (1,), func1, 50_000, rng)
        assert rep.passed, rep.label

    def test_broken_sampler_fails(self, rng):
        broken = jittered_theta(Sequence({0: 1.0, 1: 1.0}))
        func = TestFunctional.anchor_indicator((0,), BOX)
        rep = check_tsf_theta(broken, (1,), func, 30_000, rng)
        assert not rep.passed


class TestTiltIdentity:
    def test_trivial_i_zero_t_one(self, rng):
        func = TestFunctional.coordinate_ratio((0,), (1,))
        rep = check_tilt_identity(BR1, (0,), 1.0, func, 5000, rng)
        assert rep.z_score == 0.0

    def test_independent_both_sides_zero(self, rng):
        func = TestFunctional.exceed_indicator((1,), 1.0)
        rep = check_tilt_identity(Independent(), (1,), 2.0, func, 5000, rng)
        assert rep.lhs.estimate == 0.0
        assert rep.rhs.estimate == 0.0
        assert rep.passed

    def test_br_passes(self, rng):
        func = TestFunctional.coordinate_ratio((0,), (1,))
        for t in (0.5, 2.0):
            rep = check_tilt_identity(BR1, (1,), t, func, 50_000, rng)
            assert rep.passed, rep.label


class TestYFidi:
    def test_at_anchor_zero_both_sides(self, rng):
        rep = check_y_fidi(BR1, (0,), [(0,)], [1.0], 30_000, rng)
        assert rep.rhs.estimate == 0.0
        assert rep.lhs.estimate == 0.0

    def test_independent_concentrates(self, rng):
        rep = check_y_fidi(Independent(), (0,), [(1,)], [50.0], 60_000, rng)
        assert rep.passed
        assert rep.rhs.estimate > 0.97

    def test_br_two_points(self):
        rep = check_y_fidi(
            BR1,
            (0,),
            [(1,), (2,)],
            [1.5, 2.0],
            150_000,
            np.random.default_rng(33),
            workers=2,
        )
        assert rep.status == "ok"
        assert rep.passed

    def test_too_few_events_inconclusive(self, rng):
        rep = check_y_fidi(BR1, (0,), [(1,)], [1.0], 1000, rng, u=200.0)
        assert rep.status == "inconclusive"


class TestSuites:
    def test_calibration_mean_abs_z(self):
        reps = standard_suite(
            BR1, ["tsf_z", "tsf_theta", "tilt"], 4, 20_000, seed=11, workers=2
        )
        reps += standard_suite(
            SEQ31, ["tsf_z", "tsf_theta", "tilt"], 4, 20_000, seed=12, workers=2
        )
        zs = [abs(r.z_score) for r in reps if math.isfinite(r.z_score)]
        assert len(reps) >= 20
        assert np.mean(zs) < 2.0
        assert sum(r.passed for r in reps) >= len(reps) - 1

    def test_broken_power(self):
        reps = broken_power_suite(20_000, seed=3)
        assert sum(not r.passed for r in reps) >= 18
