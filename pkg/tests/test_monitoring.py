import math

import numpy as np
import pytest

from condrand import (
    DesignSpec,
    LookSchedule,
    SpendingFunction,
    UnderSampleError,
    centered_scores,
    estimate_boundaries,
    incremental_alpha,
    nonparametric_quantile,
    sequential_decision,
    spend,
)
from condrand.bruteforce import exact_statistic_distribution, exact_statistic_quantile

OBF = SpendingFunction("obf", 0.05)


class TestSpend:
    def test_endpoints(self):
        assert spend(OBF, 0.0) == 0.0
        assert spend(OBF, 1.0) == pytest.approx(0.05, abs=1e-12)

    def test_reported_value_at_first_look(self):
        assert spend(OBF, 0.3617) == pytest.approx(0.0011, abs=5e-4)

    def test_monotone_on_grid(self):
        for sf in (OBF, SpendingFunction("pocock", 0.05)):
            grid = np.linspace(0.0, 1.0, 1001)
            values = [spend(sf, t) for t in grid]
            assert all(b >= a for a, b in zip(values, values[1:]))

    def test_pocock_form(self):
        sf = SpendingFunction("pocock", 0.04)
        assert spend(sf, 1.0) == pytest.approx(0.04, abs=1e-12)
        assert spend(sf, 0.5) == pytest.approx(0.04 * math.log1p((math.e - 1) * 0.5))

    def test_domain(self):
        with pytest.raises(ValueError):
            spend(OBF, 1.5)
        with pytest.raises(ValueError):
            SpendingFunction("obf", 0.0)
        with pytest.raises(ValueError):
            SpendingFunction("wang-tsiatis", 0.05)


class TestIncrementalAlpha:
    def test_reported_trio(self):
        got = incremental_alpha(OBF, [0.3617, 0.6248, 1.0])
        assert got == pytest.approx([0.0011, 0.0121, 0.0373], abs=5e-4)

    def test_single_look_spends_everything(self):
        assert incremental_alpha(OBF, [1.0]) == [pytest.approx(0.05, abs=1e-12)]

    def test_levels_are_probabilities(self):
        got = incremental_alpha(SpendingFunction("pocock", 0.1), [0.2, 0.5, 0.8, 1.0])
        assert all(0.0 <= a <= 1.0 for a in got)

    def test_nonmonotone_rejected(self):
        with pytest.raises(ValueError):
            incremental_alpha(OBF, [0.5, 0.3, 1.0])
        with pytest.raises(ValueError):
            incremental_alpha(OBF, [0.5, 0.9])


class TestNonparametricQuantile:
    def test_uniform_grid_median(self):
        assert nonparametric_quantile(np.arange(1.0, 101.0), 0.5) == pytest.approx(50.5, abs=0.5)

    def test_constant_sample(self):
        assert nonparametric_quantile(np.full(40, 3.25), 0.9) == 3.25

    def test_uniform_draws(self):
        u = np.random.default_rng(3).random(100_000)
        assert nonparametric_quantile(u, 0.9) == pytest.approx(0.9, abs=0.005)
        assert nonparametric_quantile(u, 0.9, method="ecdf") == pytest.approx(0.9, abs=0.005)

    def test_ecdf_is_conservative(self):
        x = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 3.0])
        d = nonparametric_quantile(x, 0.75, method="ecdf")
        assert (x > d).sum() / x.size <= 0.25

    def test_errors(self):
        with pytest.raises(ValueError):
            nonparametric_quantile([], 0.5)
        with pytest.raises(ValueError):
            nonparametric_quantile([1.0], 1.0)
        with pytest.raises(ValueError):
            nonparametric_quantile([1.0], 0.5, method="kernel")


class TestSequentialDecision:
    def test_first_crossing_wins(self):
        d = [2.0, 4.0, 6.0]
        assert sequential_decision([3.0, 0.0, 0.0], d).look == 1
        assert sequential_decision([1.0, 5.0, 0.0], d).look == 2

    def test_strict_inequality(self):
        dec = sequential_decision([2.0, 4.5], [2.0, 4.0])
        assert dec.rejected and dec.look == 2

    def test_no_rejection(self):
        dec = sequential_decision([1.0, 2.0, 3.0], [2.0, 4.0, 6.0])
        assert not dec.rejected and dec.look is None


class TestEstimateBoundaries:
    def _setup(self, n=12, seed=4):
        rng = np.random.default_rng(seed)
        design = DesignSpec.bcd(2 / 3)
        responses = rng.standard_normal(n)
        return design, responses

    def test_single_look_matches_exact_quantile(self):
        design, responses = self._setup()
        n, n1 = 12, 6
        schedule = LookSchedule.single(n, n1)
        sf = SpendingFunction("obf", 0.10)
        result = estimate_boundaries(design, schedule, responses, sf, 20_000, rng=5)
        scores = centered_scores(responses)
        exact_d = exact_statistic_quantile(design, scores, n1, 0.10)
        support, _ = exact_statistic_distribution(design, scores, n1)
        gaps = np.diff(support)
        # estimated boundary within one support step of the exact one
        assert abs(result.d[0] - exact_d) <= gaps.max() + 1e-9
        # and conservative: strict tail at d is within the budget, by MC
        _, probs = exact_statistic_distribution(design, scores, n1)
        tail = sum(float(p) for s, p in zip(support, probs) if s > result.d[0])
        assert tail <= 0.10 + 3 * math.sqrt(0.1 * 0.9 / 20_000)

    def test_degenerate_spend_gives_sentinel(self):
        design, responses = self._setup()
        schedule = LookSchedule.from_pairs([(6, 3), (12, 6)])
        sf = SpendingFunction("obf", 0.05)
        # the first fraction is so small the spend underflows to zero
        result = estimate_boundaries(
            design, schedule, responses, sf, 2000, rng=6, info_fractions=[0.01, 1.0]
        )
        assert math.isinf(result.d[0])
        assert result.incremental_alpha[0] == 0.0
        assert math.isfinite(result.d[1])

    def test_under_sample_error(self):
        design, responses = self._setup()
        schedule = LookSchedule.single(12, 6)
        with pytest.raises(UnderSampleError):
            estimate_boundaries(
                design, schedule, responses, SpendingFunction("obf", 0.05), 50, rng=7
            )

    def test_deterministic_given_seed(self):
        design, responses = self._setup()
        schedule = LookSchedule.from_pairs([(6, 3), (12, 6)])
        sf = SpendingFunction("obf", 0.05)
        a = estimate_boundaries(design, schedule, responses, sf, 3000, rng=42)
        b = estimate_boundaries(design, schedule, responses, sf, 3000, rng=42)
        assert a.d == b.d and a.info_fractions == b.info_fractions

    def test_stage_counts_reported(self):
        design, responses = self._setup()
        schedule = LookSchedule.from_pairs([(6, 3), (12, 6)])
        sf = SpendingFunction("obf", 0.05)
        result = estimate_boundaries(design, schedule, responses, sf, 2000, rng=8)
        assert len(result.n_used) == 2 and len(result.n_generated) == 2
        assert result.n_generated[1] >= 2000
        assert result.n_used[1] <= result.n_generated[1]

    def test_spend_reconstruction(self):
        design, responses = self._setup()
        schedule = LookSchedule.from_pairs([(6, 3), (12, 6)])
        sf = SpendingFunction("obf", 0.05)
        result = estimate_boundaries(design, schedule, responses, sf, 2000, rng=9)
        # alphas recombine to the total level
        total = 0.0
        survive = 1.0
        for a in result.incremental_alpha:
            total += survive * a
            survive *= 1 - a
        assert total == pytest.approx(0.05, abs=1e-12)

    def test_quantile_method_flag(self):
        design, responses = self._setup()
        schedule = LookSchedule.single(12, 6)
        sf = SpendingFunction("obf", 0.2)
        smooth = estimate_boundaries(design, schedule, responses, sf, 5000, rng=10)
        ecdf = estimate_boundaries(
            design, schedule, responses, sf, 5000, rng=10, quantile_method="ecdf"
        )
        scores = centered_scores(responses)
        support, _ = exact_statistic_distribution(design, scores, 6)
        assert abs(smooth.d[0] - ecdf.d[0]) <= np.diff(support).max() + 1e-9
