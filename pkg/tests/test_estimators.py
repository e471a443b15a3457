import math

import numpy as np
import pytest

from maxstable import (
    Alternating,
    BrownResnick,
    Independent,
    Mixture,
    Product,
    Sequence,
    UsageError,
    Variogram,
    Window,
    anti_clustering_probe,
    br_lower_bound,
    exact_sequence_theta,
    theta_anchor,
    theta_block,
    theta_difference,
    theta_exceed,
    theta_mixture,
    theta_pickands,
    theta_pickands_sweep,
    theta_ratio,
)
from maxstable.estimators import EstimateReport
from maxstable.functionals import AnchorKind, AnchorMap
from maxstable.mc import combined_stderr

SEQ31 = Sequence({0: 3.0, 1: 1.0})
SEQ11 = Sequence({0: 1.0, 1: 1.0})
BR1 = BrownResnick(Variogram.power())
W4 = Window((-4,), (4,))
FIRST_MAX = AnchorMap(AnchorKind.FIRST_MAX)
FIRST_EXCEED = AnchorMap(AnchorKind.FIRST_EXCEED)


def within(a, b, tol):
    assert abs(a - b) < tol, f"{a} vs {b} (tol {tol})"


class TestRatio:
    def test_independent_exact_one(self, rng):
        rep = theta_ratio(Independent(), W4, 1000, rng)
        assert rep.estimate == 1.0
        assert rep.stderr == 0.0

    def test_sequence_oracle(self, rng):
        rep = theta_ratio(SEQ31, W4, 100_000, rng)
        within(rep.estimate, 0.75, 3 * rep.stderr + 1e-12)

    def test_alternating_decreases_to_zero(self, rng):
        # small windows are flagged divergent (contribute 0); larger windows
        # yield the raw ratio 1/#evens, itself vanishing with the window
        for rad in (10, 25, 60):
            rep = theta_ratio(Alternating(), Window((-rad,), (rad,)), 500, rng)
            assert rep.estimate <= 1.0 / rad
        rep = theta_ratio(Alternating(), Window((-60,), (60,)), 500, rng)
        assert rep.estimate == pytest.approx(1.0 / 61.0)
        assert rep.diagnostics["divergent"] in (0.0, 1.0)

    def test_strictly_below_one_for_clustered(self, rng):
        rep = theta_ratio(SEQ31, W4, 2000, rng)
        assert rep.estimate < 1.0


class TestExceed:
    def test_independent_exact_one(self, rng):
        rep = theta_exceed(Independent(), W4, 1000, rng)
        assert rep.estimate == 1.0 and rep.stderr == 0.0

    def test_sequence_oracle(self, rng):
        rep = theta_exceed(SEQ31, W4, 100_000, rng)
        within(rep.estimate, 0.75, 3 * rep.stderr)

    def test_alternating_reciprocal_even_count(self, rng):
        # every even point exceeds (Y = R > 1 there), so 1/B = 1/#evens
        for rad in (10, 20):
            rep = theta_exceed(Alternating(), Window((-rad,), (rad,)), 500, rng)
            assert rep.estimate == pytest.approx(1.0 / (rad + 1))
            assert rep.diagnostics["divergent"] == 1.0

    def test_agrees_with_ratio_on_br(self, rng):
        w = Window((-25,), (25,))
        a = theta_exceed(BR1, w, 60_000, rng, workers=2)
        b = theta_ratio(BR1, w, 60_000, rng, workers=2)
        within(a.estimate, b.estimate, 3 * combined_stderr(a.stderr, b.stderr))


class TestAnchor:
    def test_independent_every_map(self, rng):
        for kind in AnchorKind:
            rep = theta_anchor(Independent(), W4, AnchorMap(kind), 500, rng)
            assert rep.estimate == 1.0, kind

    def test_sequence_first_max(self, rng):
        rep = theta_anchor(SEQ31, W4, FIRST_MAX, 100_000, rng)
        within(rep.estimate, 0.75, 3 * rep.stderr)

    def test_first_vs_last_exceed_on_br(self, rng):
        w = Window((-25,), (25,))
        a = theta_anchor(BR1, w, FIRST_EXCEED, 60_000, rng, workers=2)
        b = theta_anchor(BR1, w, AnchorMap(AnchorKind.LAST_EXCEED), 60_000, rng, workers=2)
        within(a.estimate, b.estimate, 3 * combined_stderr(a.stderr, b.stderr))

    def test_order_choice_does_not_change_theta(self, rng):
        # any translation-invariant order yields the same index; with the
        # symmetric (1,1) atoms both tie-break directions give 1/2
        from maxstable import LatticeOrder

        rev = AnchorMap(AnchorKind.FIRST_MAX, order=LatticeOrder.REVERSED_LEXICOGRAPHIC)
        lex = theta_anchor(SEQ11, W4, FIRST_MAX, 40_000, rng)
        flip = theta_anchor(SEQ11, W4, rev, 40_000, rng)
        within(lex.estimate, 0.5, 3 * lex.stderr)
        within(flip.estimate, 0.5, 3 * flip.stderr)
        # the tie-break itself does flip: a two-way tie anchors at opposite ends
        from maxstable.functionals import batch_anchor_at_origin

        row = np.zeros((1, W4.npoints))
        row[0, W4.index_of((0,))] = 1.0
        row[0, W4.index_of((2,))] = 1.0
        assert batch_anchor_at_origin(row, W4, AnchorKind.FIRST_MAX)[0]
        assert not batch_anchor_at_origin(row, W4, AnchorKind.LAST_MAX)[0]


class TestDifference:
    def test_independent(self, rng):
        rep = theta_difference(Independent(), W4, 500, rng)
        assert rep.estimate == 1.0

    def test_sequence_half(self, rng):
        rep = theta_difference(SEQ11, W4, 100_000, rng)
        within(rep.estimate, 0.5, 3 * rep.stderr)

    def test_agrees_with_ratio_on_br(self, rng):
        w = Window((-25,), (25,))
        a = theta_difference(BR1, w, 60_000, rng, workers=2)
        b = theta_ratio(BR1, w, 60_000, rng, workers=2)
        within(a.estimate, b.estimate, 3 * combined_stderr(a.stderr, b.stderr))


class TestPickands:
    def test_independent_closed_form(self, rng):
        rep = theta_pickands(Independent(), 10, 100_000, rng)
        within(rep.estimate, 1.1, 3 * rep.stderr)

    def test_sequence_sweep_decreases_to_oracle(self, rng):
        reps = theta_pickands_sweep(SEQ31, [10, 20, 40, 80], 40_000, rng, workers=2)
        estimates = [r.estimate for r in reps]
        closed = [(1.0 + 3.0 * (n + 1)) / (4.0 * n) for n in (10, 20, 40, 80)]
        for est, rep, target in zip(estimates, reps, closed):
            within(est, target, 4 * rep.stderr)
        assert estimates[-1] > 0.75 - 3 * reps[-1].stderr

    def test_sweep_requires_increasing(self, rng):
        with pytest.raises(UsageError):
            theta_pickands_sweep(SEQ31, [10, 10], 1000, rng)

    def test_br_sweep_approaches_ratio(self):
        # finite-n bias decays like 1/n; at n = 512 it sits inside the
        # Monte Carlo noise of a 1e4-replicate sweep value
        reps = theta_pickands_sweep(
            BR1, [128, 256, 512], 10_000, np.random.default_rng(77), workers=2
        )
        assert all(r.diagnostics["max_method"] == "tail" for r in reps)
        ratio = theta_ratio(BR1, Window((-40,), (40,)), 100_000, np.random.default_rng(78), workers=2)
        final = reps[-1]
        within(final.estimate, ratio.estimate, 3 * combined_stderr(final.stderr, ratio.stderr))
        # convergence from above, per the subadditivity argument
        ests = [r.estimate for r in reps]
        assert ests[0] > ests[-1] > ratio.estimate - 3 * final.stderr

    def test_tail_and_spectral_methods_agree(self, rng):
        a = theta_pickands(SEQ31, 40, 40_000, rng, method="spectral")
        b = theta_pickands(SEQ31, 40, 40_000, rng, method="tail")
        within(a.estimate, b.estimate, 3 * combined_stderr(a.stderr, b.stderr))

    def test_tail_method_exact_for_independent(self, rng):
        # every replicate contributes exactly (n+1)/n; only float pooling noise
        rep = theta_pickands(Independent(), 10, 1000, rng, method="tail")
        assert rep.estimate == pytest.approx(1.1, rel=1e-12)
        assert rep.stderr < 1e-8


class TestBlock:
    def test_independent_closed_form(self, rng):
        rep = theta_block(Independent(), 10_000, 20, 1.0, 60_000, rng)
        within(rep.estimate, 21.0 / 20.0, 4 * rep.stderr + 2e-3)

    def test_sequence_oracle(self, rng):
        rep = theta_block(SEQ31, 100_000, 400, 1.0, 60_000, rng, workers=2)
        within(rep.estimate, 0.75, 3 * rep.stderr + 1.0 / 400)

    def test_tau_invariance(self, rng):
        rep = theta_block(
            SEQ31, 100_000, 200, 1.0, 30_000, rng, tau_sweep=[0.5, 2.0], workers=2
        )
        for entry in rep.diagnostics["tau_sweep"]:
            within(
                entry["estimate"],
                rep.estimate,
                3 * combined_stderr(entry["stderr"], rep.stderr),
            )

    def test_raw_mode_matches_analytic(self, rng):
        a = theta_block(SEQ31, 2000, 50, 1.0, 60_000, rng, mode="analytic", workers=2)
        b = theta_block(SEQ31, 2000, 50, 1.0, 200_000, rng, mode="raw", workers=2)
        within(a.estimate, b.estimate, 3 * combined_stderr(a.stderr, b.stderr))

    def test_block_too_large(self, rng):
        with pytest.raises(UsageError):
            theta_block(SEQ31, 100, 50, 1.0, 1000, rng)


class TestLowerBound:
    def test_origin_term_is_one(self):
        res = br_lower_bound(Variogram.power(), Window((0,), (0,)))
        assert res.window_sum == pytest.approx(1.0)

    def test_golden_value(self):
        # deterministic sum for gamma(h) = |h| on [-50, 50], cross-checked
        # against a 40-digit mpmath evaluation during development
        res = br_lower_bound(Variogram.power(), Window((-50,), (50,)))
        assert res.window_sum == pytest.approx(8.159283278058027, abs=1e-11)
        assert res.tail_bound == pytest.approx(0.028997019368431232, rel=1e-9)
        assert res.value == pytest.approx(0.12212576556695254, abs=1e-11)

    def test_bound_below_ratio_estimate(self, rng):
        for scale in (0.5, 1.0, 2.0):
            v = Variogram.power(scale=scale)
            bound = br_lower_bound(v, Window((-80,), (80,)))
            rad = {0.5: 100, 1.0: 60, 2.0: 40}[scale]
            rep = theta_ratio(
                BrownResnick(v), Window((-rad,), (rad,)), 20_000, rng, workers=2
            )
            assert rep.estimate >= bound.value - 3 * rep.stderr

    def test_table_variogram_has_no_tail_model(self):
        v = Variogram.from_table({(t,): abs(t) for t in range(-3, 4)})
        res = br_lower_bound(v, Window((-3,), (3,)))
        assert res.tail_bound is None
        assert res.diagnostics.get("tail_ignored")


class TestAntiClustering:
    def test_independent_all_one(self, rng):
        reps = anti_clustering_probe(Independent(), [1, 2, 5], W4.enlarged(4), 2000, rng)
        assert all(r.estimate == 1.0 for r in reps)

    def test_alternating_all_zero(self, rng):
        reps = anti_clustering_probe(Alternating(), [1, 2, 5], W4.enlarged(4), 2000, rng)
        assert all(r.estimate == 0.0 for r in reps)

    def test_br_monotone_toward_one(self, rng):
        reps = anti_clustering_probe(
            BR1, [1, 4, 16], Window((-40,), (40,)), 30_000, rng, workers=2
        )
        vals = [r.estimate for r in reps]
        ses = [r.stderr for r in reps]
        for (v1, s1), (v2, s2) in zip(zip(vals, ses), zip(vals[1:], ses[1:])):
            assert v2 >= v1 - 3 * combined_stderr(s1, s2)
        assert vals[-1] > vals[0]

    def test_m_must_stay_inside(self, rng):
        with pytest.raises(UsageError):
            anti_clustering_probe(BR1, [5], W4, 100, rng)


class TestMixtureCombine:
    def _rep(self, est, se):
        return EstimateReport(est, se, 1000, W4, "ratio")

    def test_degenerate(self):
        rep = theta_mixture(0.5, self._rep(1.0, 0.0), self._rep(1.0, 0.0))
        assert rep.estimate == 1.0

    def test_arithmetic(self):
        rep = theta_mixture(0.7, self._rep(0.75, 0.01), self._rep(0.0, 0.02))
        assert rep.estimate == pytest.approx(0.525)
        assert rep.stderr == pytest.approx(math.hypot(0.7 * 0.01, 0.3 * 0.02))

    def test_swap_symmetry(self):
        a, b = self._rep(0.75, 0.01), self._rep(0.25, 0.02)
        r1 = theta_mixture(0.3, a, b)
        r2 = theta_mixture(0.7, b, a)
        assert r1.estimate == pytest.approx(r2.estimate)
        assert r1.stderr == pytest.approx(r2.stderr)

    def test_p_range(self):
        with pytest.raises(UsageError):
            theta_mixture(0.0, self._rep(1, 0), self._rep(1, 0))


class TestCrossCuttingInvariants:
    def test_window_robustness_br(self):
        a = theta_ratio(BR1, Window((-25,), (25,)), 30_000, np.random.default_rng(5), workers=2)
        b = theta_ratio(BR1, Window((-50,), (50,)), 30_000, np.random.default_rng(6), workers=2)
        within(a.estimate, b.estimate, 3 * combined_stderr(a.stderr, b.stderr))

    def test_monotone_in_variogram(self, rng):
        w = Window((-40,), (40,))
        hi = theta_ratio(BrownResnick(Variogram.power(scale=4.0)), w, 30_000, rng, workers=2)
        lo = theta_ratio(BrownResnick(Variogram.power(scale=1.0)), w, 30_000, rng, workers=2)
        assert hi.estimate >= lo.estimate - 3 * combined_stderr(hi.stderr, lo.stderr)

    def test_product_rule(self, rng):
        prod = Product(SEQ31, SEQ11)
        w2 = Window((-3, -3), (3, 3))
        rep = theta_ratio(prod, w2, 50_000, rng, workers=2)
        target = exact_sequence_theta(SEQ31) * exact_sequence_theta(SEQ11)
        within(rep.estimate, target, 3 * rep.stderr + 1e-12)

    def test_theta_range_validation(self):
        good = EstimateReport(0.5, 0.01, 100, W4, "ratio")
        assert good.validate_theta_range()
        bad = EstimateReport(1.2, 0.01, 100, W4, "ratio")
        assert not bad.validate_theta_range()

    def test_estimates_in_range_all_models(self, rng):
        for model in (SEQ31, SEQ11, Independent(), BR1):
            rep = theta_ratio(model, W4, 5000, rng)
            assert rep.validate_theta_range()
