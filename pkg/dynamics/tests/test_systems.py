import numpy as np
from django.test import SimpleTestCase

from dynamics.exceptions import BudgetExceeded, IncompatibleSpec, WindowError
from dynamics.models import Exactness, Point, SystemKind, SystemSpec
from dynamics.services import SystemService
from dynamics.services.system_service import dyadic_radius


def full_shift(window=2):
    return SystemService.make_system(SystemSpec(kind=SystemKind.FULL_SHIFT, alphabet=2, window=window))


def golden_mean(window=2):
    return SystemService.make_system(SystemSpec(kind=SystemKind.SFT, alphabet=2, forbidden=("11",), window=window))


class DyadicRadiusTests(SimpleTestCase):
    def test_powers_of_two(self):
        self.assertEqual(dyadic_radius(0.5, strict=False), 0)
        self.assertEqual(dyadic_radius(0.5, strict=True), 1)
        self.assertEqual(dyadic_radius(0.125, strict=False), 2)
        self.assertEqual(dyadic_radius(0.125, strict=True), 3)

    def test_between_powers(self):
        self.assertEqual(dyadic_radius(0.3, strict=False), 1)
        self.assertEqual(dyadic_radius(0.3, strict=True), 1)

    def test_large_radius_is_whole_space(self):
        self.assertEqual(dyadic_radius(1.0, strict=False), -1)
        self.assertEqual(dyadic_radius(2.0, strict=True), -1)

    def test_rejects_nonpositive(self):
        with self.assertRaises(ValueError):
            dyadic_radius(0.0, strict=True)


class MakeSystemTests(SimpleTestCase):
    def test_unknown_kind(self):
        with self.assertRaises(IncompatibleSpec):
            SystemService.make_system(SystemSpec(kind="baker"))

    def test_sft_needs_forbidden_words(self):
        with self.assertRaises(IncompatibleSpec):
            SystemService.make_system(SystemSpec(kind=SystemKind.SFT))

    def test_forbidden_word_outside_alphabet(self):
        with self.assertRaises(IncompatibleSpec):
            SystemService.make_system(SystemSpec(kind=SystemKind.SFT, forbidden=("12",)))

    def test_alphabet_must_fit_int8_symbols(self):
        with self.assertRaises(IncompatibleSpec) as caught:
            SystemService.make_system(SystemSpec(kind=SystemKind.FULL_SHIFT, alphabet=200))
        self.assertIn("200", str(caught.exception))
        with self.assertRaises(IncompatibleSpec):
            SystemService.make_system(SystemSpec(kind=SystemKind.SFT, alphabet=128, forbidden=("11",)))
        self.assertEqual(SystemService.make_system(SystemSpec(kind=SystemKind.FULL_SHIFT, alphabet=127)).alphabet, 127)

    def test_precision_needs_wider_window(self):
        with self.assertRaises(WindowError) as caught:
            SystemService.make_system(SystemSpec(kind=SystemKind.FULL_SHIFT, window=2, precision=0.01))
        self.assertIn("window", str(caught.exception))

    def test_admissibility(self):
        system = golden_mean()
        self.assertTrue(system.is_admissible([0, 1, 0, 1]))
        self.assertFalse(system.is_admissible([0, 1, 1, 0]))


class MetricTests(SimpleTestCase):
    def test_symbolic_distance_is_first_disagreement(self):
        system = full_shift()
        x = Point(values=(0, 0, 0, 0, 0), lo=-2)
        self.assertEqual(system.distance(x, x), 0.0)
        self.assertEqual(system.distance(x, Point(values=(0, 0, 0, 1, 0), lo=-2)), 0.5)
        self.assertEqual(system.distance(x, Point(values=(0, 0, 1, 0, 0), lo=-2)), 1.0)
        self.assertEqual(system.distance(x, Point(values=(1, 0, 0, 0, 0), lo=-2)), 0.25)

    def test_interval_distance_weights_coordinates(self):
        system = SystemService.make_system(SystemSpec(kind=SystemKind.INTERVAL_SHIFT, window=1))
        x = Point(values=(0.0, 0.0, 0.0), lo=-1)
        y = Point(values=(1.0, 1.0, 1.0), lo=-1)
        self.assertAlmostEqual(system.distance(x, y), 2.0)
        distance, hidden = system.distance_with_error(x, y)
        self.assertAlmostEqual(hidden, 1.0)

    def test_circle_distance_wraps(self):
        system = SystemService.make_system(SystemSpec(kind=SystemKind.CIRCLE_DOUBLING))
        self.assertAlmostEqual(system.distance(Point(values=(0.1,)), Point(values=(0.9,))), 0.2)

    def test_distance_matrix_matches_pointwise(self):
        system = full_shift()
        K = SystemService.enumerate_points(system, 1)
        matrix = system.distance_matrix(K.values, K.lo, K.values, K.lo)
        for i in range(len(K)):
            for j in range(len(K)):
                self.assertEqual(matrix[i, j], system.distance(K.point(i), K.point(j)))


class ApplyTests(SimpleTestCase):
    def test_shift_moves_window(self):
        system = full_shift()
        moved = system.apply(Point(values=(0, 1, 1), lo=-1), 1)
        self.assertEqual(moved.lo, -2)
        self.assertEqual(moved.coordinate(0), 1)

    def test_shift_past_window_raises(self):
        with self.assertRaises(WindowError) as caught:
            full_shift().apply(Point(values=(0, 1, 1), lo=-1), 3)
        self.assertEqual(caught.exception.required, (-1, 3))

    def test_doubling(self):
        system = SystemService.make_system(SystemSpec(kind=SystemKind.CIRCLE_DOUBLING))
        self.assertAlmostEqual(system.apply(Point(values=(0.375,)), 2).values[0], 0.5)


class EnumerateTests(SimpleTestCase):
    def test_full_shift_words(self):
        K = SystemService.enumerate_points(full_shift(), 1)
        self.assertEqual(len(K), 8)
        self.assertEqual(K.exactness, Exactness.EXACT_ENUMERATION)
        self.assertEqual(K.density, 0.25)
        self.assertEqual(tuple(K.values[0]), (0, 0, 0))

    def test_golden_mean_words_follow_fibonacci(self):
        sizes = [len(SystemService.enumerate_points(golden_mean(), 0, horizon=h)) for h in range(5)]
        self.assertEqual(sizes, [2, 3, 5, 8, 13])

    def test_words_are_sorted(self):
        K = SystemService.enumerate_points(golden_mean(), 1, horizon=1)
        rows = [tuple(row) for row in K.values.tolist()]
        self.assertEqual(rows, sorted(rows))

    def test_budget(self):
        with self.assertRaises(BudgetExceeded) as caught:
            SystemService.enumerate_points(full_shift(), 5, budget=16)
        self.assertEqual(caught.exception.needed, 2 ** 11)

    def test_interval_grid_and_lazy_grid(self):
        system = SystemService.make_system(SystemSpec(kind=SystemKind.INTERVAL_SHIFT, resolution=2))
        grid = SystemService.enumerate_points(system, 1)
        self.assertEqual(len(grid), 8)
        self.assertEqual(grid.density, 0.25)
        implicit = SystemService.enumerate_points(system, 2, horizon=2, lazy=True, budget=16)
        self.assertFalse(implicit.materialized)
        self.assertEqual(implicit.size, 2 ** 7)

    def test_circle_grid(self):
        system = SystemService.make_system(SystemSpec(kind=SystemKind.CIRCLE_DOUBLING, resolution=16))
        K = SystemService.enumerate_points(system, 0)
        self.assertEqual(len(K), 16)
        self.assertEqual(K.values[1, 0], 1.0 / 16)


class SampleTests(SimpleTestCase):
    def test_seeded_samples_repeat(self):
        system = golden_mean()
        first = SystemService.sample_points(system, 20, 7, 2, horizon=3)
        second = SystemService.sample_points(system, 20, 7, 2, horizon=3)
        np.testing.assert_array_equal(first.values, second.values)
        self.assertTrue(system.admissible_rows(first.values).all())

    def test_circle_sample_lies_in_unit_interval(self):
        system = SystemService.make_system(SystemSpec(kind=SystemKind.CIRCLE_DOUBLING))
        K = SystemService.sample_points(system, 10, 3, 0)
        self.assertEqual(K.values.shape, (10, 1))
        self.assertTrue(np.all((K.values >= 0) & (K.values < 1)))
        self.assertEqual(K.exactness, Exactness.ORBIT_SAMPLE)

    def test_point_set_needs_one_window(self):
        with self.assertRaises(WindowError):
            SystemService.point_set_from(full_shift(), [Point(values=(0, 1), lo=0), Point(values=(0, 1, 1), lo=-1)])
