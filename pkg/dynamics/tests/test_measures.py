import math

import numpy as np
from django.test import SimpleTestCase

from dynamics.exceptions import IncompatibleSpec, WindowError
from dynamics.models import Bound, CountMethod, CountMode, MassMethod, MeasureKind, MeasureSpec, Point, SystemKind, SystemSpec
from dynamics.services import MeasureService, SystemService
from dynamics.services.measure_service import child_seed, shannon_entropy

GOLDEN = (1 + math.sqrt(5)) / 2


def make(kind, **fields):
    return SystemService.make_system(SystemSpec(kind=kind, **fields))


def bernoulli(system, weights=(0.5, 0.5), seed=0):
    return MeasureService.make_measure(MeasureSpec(kind=MeasureKind.BERNOULLI, weights=weights), system, seed)


class SeedTests(SimpleTestCase):
    def test_child_seeds_are_stable_and_distinct(self):
        self.assertEqual(child_seed(1, 2), child_seed(1, 2))
        self.assertNotEqual(child_seed(1, 2), child_seed(1, 3))
        self.assertNotEqual(child_seed(1, 2), child_seed(2, 2))

    def test_shannon_entropy(self):
        self.assertAlmostEqual(shannon_entropy([0.5, 0.5]), math.log(2))
        self.assertAlmostEqual(shannon_entropy([1.0, 0.0]), 0.0)


class MakeMeasureTests(SimpleTestCase):
    def test_bernoulli_needs_full_shift(self):
        with self.assertRaises(IncompatibleSpec):
            bernoulli(make(SystemKind.SFT, forbidden=("11",)))

    def test_bernoulli_weights_must_sum_to_one(self):
        with self.assertRaises(IncompatibleSpec):
            bernoulli(make(SystemKind.FULL_SHIFT), weights=(0.5, 0.6))

    def test_lebesgue_is_not_symbolic(self):
        with self.assertRaises(IncompatibleSpec):
            MeasureService.make_measure(MeasureSpec(kind=MeasureKind.PRODUCT_LEBESGUE), make(SystemKind.FULL_SHIFT))


class ParryTests(SimpleTestCase):
    def setUp(self):
        system = make(SystemKind.SFT, forbidden=("11",))
        self.mu = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.PARRY), system)

    def test_entropy_is_log_golden_ratio(self):
        self.assertAlmostEqual(self.mu.entropy(), math.log(GOLDEN))

    def test_transition(self):
        np.testing.assert_allclose(self.mu.transition.sum(axis=1), [1.0, 1.0])
        self.assertAlmostEqual(self.mu.transition[0, 0], 1 / GOLDEN)
        self.assertAlmostEqual(self.mu.transition[1, 0], 1.0)
        self.assertEqual(self.mu.cylinder_mass([1, 1]), 0.0)

    def test_mass_classes_add_up(self):
        classes = MeasureService.cylinder_mass_classes(self.mu, 0, 4)
        self.assertEqual(sum(count for _, count in classes), 13)
        self.assertAlmostEqual(sum(mass * count for mass, count in classes), 1.0)

    def test_sampler_stays_admissible(self):
        values = self.mu.sample(200, 0, 9, seed=5)
        self.assertTrue(self.mu.system.admissible_rows(values).all())


class BallMassTests(SimpleTestCase):
    def test_bernoulli_ball_is_cylinder(self):
        system = make(SystemKind.FULL_SHIFT)
        mu = bernoulli(system)
        for n in (1, 2, 3):
            x = Point(values=(0,) * (n + 2), lo=-1)
            mass = MeasureService.ball_mass(mu, system, x, n, 0.5)
            self.assertEqual(mass.method, MassMethod.EXACT)
            self.assertAlmostEqual(mass.value, 2.0 ** -(n + 2))

    def test_ball_needs_window(self):
        system = make(SystemKind.FULL_SHIFT)
        with self.assertRaises(WindowError):
            MeasureService.ball_mass(bernoulli(system), system, Point(values=(0, 0), lo=0), 2, 0.5)

    def test_monte_carlo_agrees_with_exact(self):
        system = make(SystemKind.FULL_SHIFT)
        mu = bernoulli(system, seed=11)
        x = Point(values=(0, 1, 1), lo=-1)
        sampled = MeasureService.monte_carlo_ball_mass(mu, system, x, 1, 0.5, budget=4000, seed=3)
        self.assertEqual(sampled.method, MassMethod.MONTE_CARLO)
        self.assertLess(abs(sampled.value - 0.125), 5 * sampled.stderr)

    def test_circle_arc(self):
        system = make(SystemKind.CIRCLE_DOUBLING)
        mu = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.PRODUCT_LEBESGUE), system)
        mass = MeasureService.ball_mass(mu, system, Point(values=(0.3,)), 3, 0.25)
        self.assertAlmostEqual(mass.value, 0.125)

    def test_interval_box_bounds(self):
        system = make(SystemKind.INTERVAL_SHIFT, window=4)
        mu = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.PRODUCT_LEBESGUE), system)
        x = Point(values=(0.5,) * 10, lo=-4)
        mass = MeasureService.ball_mass(mu, system, x, 2, 0.25)
        self.assertEqual(mass.method, MassMethod.BOX_BOUNDS)
        self.assertAlmostEqual(mass.lower, (0.25 / 3) ** 10)
        self.assertAlmostEqual(mass.upper, 0.25)
        self.assertTrue(mass.lower <= mass.value <= mass.upper)
        with self.assertRaises(WindowError):
            MeasureService.ball_mass(mu, system, Point(values=(0.5,) * 3, lo=-1), 2, 0.25)


class KatokCountTests(SimpleTestCase):
    def setUp(self):
        self.system = make(SystemKind.FULL_SHIFT)
        self.mu = bernoulli(self.system)

    def test_uniform_bernoulli_at_half(self):
        for n in (1, 2, 3):
            result = MeasureService.katok_count(self.mu, self.system, n, 0.5, 0.5)
            self.assertEqual(result.value, 2 ** (n + 1) + 1)
            self.assertEqual(result.bound, Bound.EXACT)

    def test_delta_and_strictness(self):
        self.assertEqual(MeasureService.katok_count(self.mu, self.system, 2, 0.5, 0.3).value, 5)
        self.assertEqual(MeasureService.katok_count(self.mu, self.system, 2, 0.5, 0.5, strict=False).value, 8)

    def test_greedy_is_tagged_as_closed_form(self):
        result = MeasureService.katok_count(self.mu, self.system, 2, 0.5, 0.5, mode=CountMode.GREEDY)
        self.assertEqual((result.value, result.bound, result.method), (9, Bound.EXACT, CountMethod.CLOSED_FORM))
        self.assertEqual(result.diagnostics["requested"], CountMode.GREEDY)

    def test_fractional_count(self):
        result = MeasureService.katok_count(self.mu, self.system, 2, 0.5, 0.3)
        self.assertEqual(result.value, 5)
        self.assertAlmostEqual(result.diagnostics["fractional"], 4.8)
        self.assertEqual(result.diagnostics["stderr"], 0.0)

    def test_diameter_variant_uses_its_own_window(self):
        wide = MeasureService.katok_count(self.mu, self.system, 2, 1.0, 0.5, variant="diameter")
        self.assertEqual(wide.diagnostics["window"], (0, 1))
        self.assertEqual(wide.value, 3)
        ball = MeasureService.katok_count(self.mu, self.system, 2, 0.5, 0.5)
        tight = MeasureService.katok_count(self.mu, self.system, 2, 0.5, 0.5, variant="diameter")
        self.assertEqual(ball.diagnostics["window"], (-1, 2))
        self.assertEqual(tight.diagnostics["window"], ball.diagnostics["window"])
        self.assertEqual(tight.value, ball.value)

    def test_diameter_variant_halves_sampled_radius(self):
        system = make(SystemKind.CIRCLE_DOUBLING)
        mu = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.PRODUCT_LEBESGUE), system)
        ball = MeasureService.katok_count(mu, system, 2, 0.2, 0.5, mode=CountMode.GREEDY, budget=400, seed=1)
        diameter = MeasureService.katok_count(
            mu, system, 2, 0.2, 0.5, variant="diameter", mode=CountMode.GREEDY, budget=400, seed=1
        )
        self.assertEqual((ball.diagnostics["radius"], diameter.diagnostics["radius"]), (0.2, 0.1))
        self.assertGreater(diameter.diagnostics["stderr"], 0.0)
        self.assertGreaterEqual(diameter.value, ball.value)

    def test_biased_classes(self):
        mu = bernoulli(self.system, weights=(0.25, 0.75))
        classes = MeasureService.cylinder_mass_classes(mu, 0, 1)
        self.assertEqual([count for _, count in classes], [1, 2, 1])
        self.assertAlmostEqual(classes[0][0], 0.5625)

    def test_rejects_bad_delta(self):
        with self.assertRaises(ValueError):
            MeasureService.katok_count(self.mu, self.system, 2, 0.5, 1.0)

    def test_sampled_count_on_circle(self):
        system = make(SystemKind.CIRCLE_DOUBLING)
        mu = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.PRODUCT_LEBESGUE), system)
        result = MeasureService.katok_count(mu, system, 1, 0.1, 0.5, mode=CountMode.GREEDY, budget=400, seed=1)
        # each arc carries mass 0.2
        self.assertGreaterEqual(result.value, 3)
        self.assertEqual(result.bound, Bound.UPPER_BOUND)


class InvarianceTests(SimpleTestCase):
    def test_bernoulli_is_invariant(self):
        system = make(SystemKind.FULL_SHIFT)
        p, q, z = MeasureService.invariance_check(bernoulli(system), 0, [0, 1], 4000, seed=9)
        self.assertAlmostEqual(p, 0.25, delta=0.05)
        self.assertLess(abs(z), 5)

    def test_circle_lebesgue_is_invariant(self):
        system = make(SystemKind.CIRCLE_DOUBLING)
        mu = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.PRODUCT_LEBESGUE), system)
        p, q, z = MeasureService.invariance_check(mu, 0, [(0.1, 0.35)], 4000, seed=2)
        self.assertLess(abs(z), 5)
