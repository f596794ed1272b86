import math

from django.test import SimpleTestCase

from dynamics.exceptions import InsufficientData
from dynamics.models import Bound, MeasureKind, MeasureSpec, RateMode, RateStatistic, SystemKind, SystemSpec
from dynamics.services import CoverService, MeasureService, RateService, SystemService
from dynamics.services.rate_service import combine_bounds

LOG2 = math.log(2)
LADDER = (2, 3, 4, 5, 6, 7, 8)


def make(kind, **fields):
    return SystemService.make_system(SystemSpec(kind=kind, **fields))


class RateFromCountsTests(SimpleTestCase):
    def test_pure_exponential(self):
        rate = RateService.rate_from_counts([(n, 2 ** n) for n in range(1, 7)], statistic=RateStatistic.INCREMENT)
        self.assertAlmostEqual(rate.value, LOG2)
        self.assertAlmostEqual(rate.average_stat, LOG2)
        self.assertAlmostEqual(rate.slope_fit.slope, LOG2)
        self.assertEqual(rate.n_range, (1, 6))

    def test_offset_is_cancelled_by_increments(self):
        counts = [(n, 3 * 2 ** n) for n in range(1, 7)]
        upper = RateService.rate_from_counts(counts, mode=RateMode.UPPER, statistic=RateStatistic.AVERAGE)
        lower = RateService.rate_from_counts(counts, mode=RateMode.LOWER, statistic=RateStatistic.AVERAGE)
        self.assertAlmostEqual(upper.value, LOG2 + math.log(3) / 4)
        self.assertAlmostEqual(lower.value, LOG2 + math.log(3) / 6)
        self.assertAlmostEqual(upper.increment_stat, LOG2)

    def test_needs_three_entries(self):
        with self.assertRaises(InsufficientData):
            RateService.rate_from_counts([(1, 2), (2, 4)])

    def test_rejects_bad_ladders(self):
        with self.assertRaises(ValueError):
            RateService.rate_from_counts([(1, 0.5), (2, 4), (3, 8)])
        with self.assertRaises(ValueError):
            RateService.rate_from_counts([(1, 2), (1, 4), (3, 8)])

    def test_combine_bounds(self):
        self.assertEqual(combine_bounds([]), Bound.EXACT)
        self.assertEqual(combine_bounds([Bound.EXACT, Bound.LOWER_BOUND]), Bound.LOWER_BOUND)
        self.assertEqual(combine_bounds([Bound.LOWER_BOUND, Bound.UPPER_BOUND]), Bound.MIXED)


class TopologicalRateTests(SimpleTestCase):
    def test_full_shift_growth(self):
        system = make(SystemKind.FULL_SHIFT)
        K = SystemService.enumerate_points(system, 0, horizon=5)
        for kind in ("separated", "spanning"):
            rate = RateService.growth_rate(system, K, 0.5, (2, 3, 4, 5, 6), kind, statistic=RateStatistic.INCREMENT)
            self.assertAlmostEqual(rate.value, LOG2)
            self.assertEqual(rate.bound, Bound.EXACT)

    def test_full_shift_mean_dimension_is_zero(self):
        system = make(SystemKind.FULL_SHIFT)
        K = SystemService.enumerate_points(system, 3, horizon=5)
        estimate = RateService.mdim_estimate(system, K, (0.5, 0.25, 0.125), (2, 3, 4, 5, 6), statistic=RateStatistic.INCREMENT)
        self.assertEqual(len(estimate.per_eps), 3)
        self.assertAlmostEqual(estimate.slope, 0.0, places=9)

    def test_circle_mean_dimension_is_zero(self):
        system = make(SystemKind.CIRCLE_DOUBLING, resolution=4096)
        K = SystemService.enumerate_points(system, 0)
        estimate = RateService.mdim_estimate(system, K, (0.25, 0.125, 0.0625), (2, 3, 4, 5, 6), statistic=RateStatistic.INCREMENT)
        self.assertLessEqual(abs(estimate.slope), 0.1)

    def test_interval_shift_mean_dimension_is_one(self):
        system = make(SystemKind.INTERVAL_SHIFT, window=8, resolution=1024)
        K = SystemService.enumerate_points(system, 8, horizon=max(LADDER) - 1, lazy=True)
        estimate = RateService.mdim_estimate(system, K, [2.0 ** -k for k in range(3, 7)], LADDER, statistic=RateStatistic.INCREMENT)
        self.assertEqual(estimate.dropped, ())
        self.assertTrue(0.8 <= estimate.slope <= 1.2)
        self.assertEqual(estimate.per_eps[0][1].bound, Bound.LOWER_BOUND)

    def test_coarse_sample_drops_eps(self):
        system = make(SystemKind.FULL_SHIFT)
        K = SystemService.enumerate_points(system, 1, horizon=5)
        estimate = RateService.mdim_estimate(system, K, (0.5, 0.25, 0.125), (2, 3, 4, 5, 6))
        self.assertIn(0.125, estimate.dropped)
        self.assertIsNone(estimate.slope)


class MeasureRateTests(SimpleTestCase):
    def setUp(self):
        self.system = make(SystemKind.FULL_SHIFT, window=4)
        self.mu = MeasureService.make_measure(
            MeasureSpec(kind=MeasureKind.BERNOULLI, weights=(0.5, 0.5)), self.system, seed=4
        )

    def test_katok_entropy_is_log_two_for_every_delta(self):
        rates = [
            RateService.katok_entropy(self.mu, self.system, 0.125, delta, LADDER, statistic=RateStatistic.INCREMENT).value
            for delta in (0.3, 0.5, 0.7)
        ]
        for rate in rates:
            self.assertAlmostEqual(rate, LOG2, delta=1e-9)
        self.assertLess(max(rates) - min(rates), 1e-6)

    def test_golden_mean_katok_entropy_does_not_depend_on_delta(self):
        system = make(SystemKind.SFT, forbidden=("11",), window=4)
        parry = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.PARRY), system, seed=4)
        ladder = tuple(range(10, 21))
        rates = [
            RateService.katok_entropy(parry, system, 0.125, delta, ladder, statistic=RateStatistic.INCREMENT).value
            for delta in (0.3, 0.5, 0.7)
        ]
        self.assertLess(max(rates) - min(rates), 1e-6)
        for rate in rates:
            self.assertAlmostEqual(rate, math.log((1 + math.sqrt(5)) / 2), delta=1e-3)

    def test_brin_katok_entropy(self):
        estimate = RateService.brin_katok_entropy(self.mu, self.system, 0.125, 8, LADDER, statistic=RateStatistic.INCREMENT)
        self.assertAlmostEqual(estimate.center, LOG2, delta=0.02)
        self.assertAlmostEqual(estimate.spread, 0.0)
        self.assertFalse(estimate.flagged)

    def test_shapira_entropy_of_generating_partition(self):
        partition = CoverService.cylinder_cover(self.system, 1)
        K = SystemService.enumerate_points(self.system, 0, horizon=max(LADDER) - 1)
        rate = RateService.shapira_entropy(self.mu, self.system, partition, K, 0.5, LADDER, statistic=RateStatistic.INCREMENT)
        self.assertAlmostEqual(rate.value, self.mu.entropy(), delta=0.02)
        self.assertEqual(rate.bound, Bound.EXACT)
        self.assertIn("mode_gap", rate.diagnostics)

    def test_cover_brin_katok_entropy(self):
        partition = CoverService.cylinder_cover(self.system, 1)
        estimate = RateService.cover_brin_katok_entropy(self.mu, self.system, partition, 4, LADDER, statistic=RateStatistic.INCREMENT)
        self.assertAlmostEqual(estimate.center, LOG2)


class LocalEntropyTests(SimpleTestCase):
    def test_local_entropy_matches_separated_rate(self):
        system = make(SystemKind.FULL_SHIFT)
        ladder = (2, 3, 4, 5)
        K = SystemService.enumerate_points(system, 2, horizon=max(ladder) - 1)
        separated = RateService.growth_rate(system, K, 0.25, ladder, statistic=RateStatistic.INCREMENT)
        local = RateService.local_entropy_at(
            system, K, K.point(0), 0.25, (1.0, 0.5, 0.25), ladder, statistic=RateStatistic.INCREMENT
        )
        self.assertAlmostEqual(local.value, separated.value, delta=1e-6)
        self.assertEqual(set(local.diagnostics["per_radius"]), {1.0, 0.5, 0.25})
