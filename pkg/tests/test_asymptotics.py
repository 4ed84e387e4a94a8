"""High-rate model tests.

Closed forms used as oracles:

    Gaussian floor    sqrt(3) pi sigma^2 / (2 N^2)
    Laplace floor     9 b^2 / N^2          (scale parameter b)
    Gaussian penalty  s0^3 / (s1^2 sqrt(3 s0^2 - 2 s1^2)),  s1 < s0 sqrt(3/2)

The penalty form follows from evaluating the companding integral for a
normal design density against a normal truth; it blows up as the truth's
scale approaches sqrt(3/2) times the design's and is undefined beyond.
"""

import math

import numpy as np
import pytest

from mismatch_quant import (
    DivergentIntegral,
    Gaussian,
    GaussianMixture,
    Laplace,
    bennett_granular,
    fit_decay_slope,
    generative_codebook,
    lloyd_max_design,
    mismatch_penalty_factor,
    overload_split,
    panter_dite,
    rate_recovery_sweep,
)


def _gaussian_penalty(s0, s1):
    return s0**3 / (s1**2 * math.sqrt(3.0 * s0**2 - 2.0 * s1**2))


class TestPanterDite:
    def test_gaussian_closed_form(self):
        for sigma in (1.0, 2.5):
            for n in (4, 64, 1024):
                want = math.sqrt(3.0) * math.pi * sigma**2 / (2.0 * n**2)
                assert panter_dite(Gaussian(0, sigma), n) == pytest.approx(
                    want, rel=1e-9)

    def test_laplace_closed_form(self):
        b = 0.8
        assert panter_dite(Laplace(0.0, b), 256) == pytest.approx(
            9.0 * b * b / 256**2, rel=1e-9)

    def test_location_invariance(self):
        assert panter_dite(Gaussian(3.0, 1.0), 16) == pytest.approx(
            panter_dite(Gaussian(0, 1), 16), rel=1e-10)

    def test_quarters_per_level_doubling(self):
        d = GaussianMixture(((0.4, -1.0, 0.7), (0.6, 1.0, 1.2)))
        assert panter_dite(d, 64) == pytest.approx(panter_dite(d, 32) / 4.0,
                                                   rel=1e-10)

    def test_level_count_validation(self):
        for bad in (1, 3, 12, 8.0, -4):
            with pytest.raises(ValueError):
                panter_dite(Gaussian(0, 1), bad)


class TestBennettGranular:
    def test_matched_approaches_the_floor_from_below(self):
        g = Gaussian(0, 1)
        ratios = []
        for bits in (4, 6, 8):
            q = lloyd_max_design(g, bits, max_iters=3000, init="cube_root")
            ratios.append(bennett_granular(g, g, 1 << bits, quantizer=q)
                          / panter_dite(g, 1 << bits))
        assert all(r < 1.0 for r in ratios)
        assert ratios == sorted(ratios)
        assert ratios[-1] > 0.95

    def test_one_bit_span_is_empty(self):
        assert bennett_granular(Gaussian(0, 1), Gaussian(0, 2), 2) == 0.0

    def test_reuses_supplied_quantizer(self):
        g = Gaussian(0, 1)
        q = lloyd_max_design(g, 5)
        a = bennett_granular(g, Laplace(0.0, 1.0), 32, quantizer=q)
        b = bennett_granular(g, Laplace(0.0, 1.0), 32)
        assert a == pytest.approx(b, rel=1e-12)


class TestOverloadSplit:
    def test_generative_codebook_zeroes_the_bias(self):
        q = lloyd_max_design(Gaussian(0, 1), 3)
        true_d = Gaussian(0, 3.0)
        gen = generative_codebook(q.partition, true_d)
        split = overload_split(q.partition, gen, true_d)
        assert split.bias_part <= 1e-25
        assert split.variance_part > 0.0

    def test_fixed_codebook_pays_a_bias(self):
        q = lloyd_max_design(Gaussian(0, 1), 3)
        true_d = Gaussian(0, 3.0)
        fix = overload_split(q.partition, q.design_codebook, true_d)
        gen = overload_split(q.partition, generative_codebook(q.partition, true_d),
                             true_d)
        assert fix.bias_part > 0.0
        assert gen.total < fix.total
        assert fix.total == pytest.approx(fix.variance_part + fix.bias_part,
                                          rel=1e-14)

    def test_size_mismatch_rejected(self):
        q = lloyd_max_design(Gaussian(0, 1), 2)
        with pytest.raises(ValueError):
            overload_split(q.partition, lloyd_max_design(Gaussian(0, 1), 3)
                           .design_codebook, Gaussian(0, 1))


class TestPenaltyFactor:
    def test_matched_is_one(self):
        for d in (Gaussian(0, 1), Gaussian(2.0, 0.5), Laplace(0.0, 1.0)):
            assert mismatch_penalty_factor(d, d) == pytest.approx(1.0, abs=1e-6)

    def test_gaussian_closed_form(self):
        cases = [(1.0, 1.2), (1.0, 0.5), (2.0, 1.0)]
        for s0, s1 in cases:
            got = mismatch_penalty_factor(Gaussian(0, s0), Gaussian(0, s1))
            assert got == pytest.approx(_gaussian_penalty(s0, s1), rel=1e-7)

    def test_narrow_truth_frozen_value(self):
        got = mismatch_penalty_factor(Gaussian(0, 1), Gaussian(0, 0.5))
        assert got == pytest.approx(2.5298221281347035, rel=1e-9)

    def test_penalty_grows_as_truth_narrows(self):
        vals = [mismatch_penalty_factor(Gaussian(0, 1), Gaussian(0, s))
                for s in (0.8, 0.5, 0.2)]
        assert vals[0] < vals[1] < vals[2]

    def test_heavy_truth_diverges(self):
        for s1 in (1.5, 2.0):
            with pytest.raises(DivergentIntegral):
                mismatch_penalty_factor(Gaussian(0, 1), Gaussian(0, s1))

    def test_laplace_truth_under_gaussian_design_diverges(self):
        # Exponential tails always overwhelm a squared-exponential density.
        with pytest.raises(DivergentIntegral):
            mismatch_penalty_factor(Gaussian(0, 1), Laplace(0.0, 1.0))

    def test_gaussian_truth_under_laplace_design_converges(self):
        got = mismatch_penalty_factor(Laplace(0.0, 1.0), Gaussian(0, 1))
        assert math.isfinite(got)
        assert got > 1.0


class TestFitDecaySlope:
    def test_exact_power_law(self):
        bits = [6, 7, 8, 9, 10]
        vals = [2.0 ** (-2 * b) for b in bits]
        assert fit_decay_slope(bits, vals) == pytest.approx(-2.0, abs=1e-12)

    def test_uses_only_the_tail(self):
        bits = [1, 2, 8, 9, 10, 11]
        vals = [5.0, 4.9] + [2.0 ** (-1.5 * b) for b in bits[2:]]
        assert fit_decay_slope(bits, vals, n_points=4) == pytest.approx(
            -1.5, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            fit_decay_slope([4], [1.0])
        with pytest.raises(ValueError):
            fit_decay_slope([4, 5], [1.0])
        with pytest.raises(ValueError):
            fit_decay_slope([4, 5], [1.0, 0.0])


class TestRateRecoverySweep:
    def test_reports_are_structured_and_consistent(self):
        reps = rate_recovery_sweep(Gaussian(0, 1), Laplace(0.0, 1.0),
                                   [3, 4, 5])
        assert [r.bits for r in reps] == [3, 4, 5]
        for r in reps:
            assert r.d_total_gen <= r.d_total_fix
            assert r.d_overload_gen <= r.d_overload_fix
            assert r.penalty_factor == pytest.approx(
                r.d_total_gen / r.d_ideal_pd, rel=1e-12)

    def test_totals_dominate_the_granular_model(self):
        for true_d in (Gaussian(0, 1.1), Laplace(0.0, 1.0)):
            reps = rate_recovery_sweep(Gaussian(0, 1), true_d, range(3, 9),
                                       max_iters=2000, init="cube_root")
            for r in reps:
                assert r.d_total_fix >= r.d_granular
                assert r.d_total_gen >= r.d_granular

    def test_ratio_converges_to_penalty_factor(self):
        """Exact adapted distortion over the matched floor approaches the
        asymptotic penalty as the rate grows, when the penalty exists."""
        design = Gaussian(0, 1)
        for s1 in (1.0, 1.1):
            true_d = Gaussian(0, s1)
            target = mismatch_penalty_factor(design, true_d)
            reps = rate_recovery_sweep(design, true_d, range(6, 13),
                                       max_iters=2000, init="cube_root")
            ratios = np.array([r.penalty_factor for r in reps])
            gaps = np.abs(ratios - target)
            assert np.all(np.diff(gaps) < 0.0)
            assert gaps[-1] / target < 0.15
