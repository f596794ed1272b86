from django.test import SimpleTestCase

from dynamics.exceptions import WindowError
from dynamics.models import Bound, CountMethod, CountMode, Point, SystemKind, SystemSpec
from dynamics.services import BowenService, SystemService
from dynamics.services.bowen_service import lattice_margin


def make(kind, **fields):
    return SystemService.make_system(SystemSpec(kind=kind, **fields))


class BowenDistanceTests(SimpleTestCase):
    def test_grows_with_n(self):
        system = make(SystemKind.FULL_SHIFT)
        x = Point(values=(0, 0, 0, 0), lo=-1)
        y = Point(values=(0, 0, 0, 1), lo=-1)
        self.assertEqual(BowenService.bowen_distance(system, x, y, 1), 0.0)
        self.assertEqual(BowenService.bowen_distance(system, x, y, 2), 0.5)
        self.assertEqual(BowenService.bowen_distance(system, x, y, 3), 1.0)


class SymbolicCountTests(SimpleTestCase):
    def setUp(self):
        self.system = make(SystemKind.FULL_SHIFT)
        self.K = SystemService.enumerate_points(self.system, 1, horizon=3)

    def test_full_shift_closed_form(self):
        # s_n = r_n = 2^(n + 2m - 2) at eps = 2^-m
        result = BowenService.separated_count(self.system, self.K, 3, 0.5)
        self.assertEqual(result.value, 8)
        self.assertEqual(result.bound, Bound.EXACT)
        self.assertEqual(result.method, CountMethod.CLOSED_FORM)
        self.assertTrue(result.diagnostics["cross_checked"])
        self.assertEqual(BowenService.spanning_count(self.system, self.K, 3, 0.5).value, 8)
        self.assertEqual(BowenService.separated_count(self.system, self.K, 3, 0.25).value, 32)

    def test_greedy_is_tagged_as_closed_form(self):
        separated = BowenService.separated_count(self.system, self.K, 2, 0.5, CountMode.GREEDY)
        spanning = BowenService.spanning_count(self.system, self.K, 2, 0.5, CountMode.GREEDY)
        for result in (separated, spanning):
            self.assertEqual((result.value, result.bound, result.method), (4, Bound.EXACT, CountMethod.CLOSED_FORM))
            self.assertEqual(result.diagnostics["requested"], CountMode.GREEDY)

    def test_cross_check_covers_a_thousand_words(self):
        K = SystemService.enumerate_points(self.system, 3, horizon=3)
        self.assertEqual(len(K), 1024)
        for count in (BowenService.separated_count, BowenService.spanning_count):
            result = count(self.system, K, 3, 0.125)
            self.assertEqual(result.value, 128)
            self.assertTrue(result.diagnostics["cross_checked"])

    def test_diameter_window(self):
        self.assertEqual(BowenService.diameter_range(1.0, 3), (0, 2))
        self.assertEqual(BowenService.diameter_range(0.5, 3), (-1, 3))
        self.assertEqual(BowenService.diameter_range(2.0, 3), (0, -1))
        for eps in (1.0, 0.5, 0.3, 0.25, 0.2, 0.125):
            self.assertEqual(BowenService.diameter_range(eps, 4), BowenService.agreement_range(eps, 4, strict=True))
        with self.assertRaises(ValueError):
            BowenService.diameter_range(0.0, 3)

    def test_golden_mean(self):
        system = make(SystemKind.SFT, forbidden=("11",))
        K = SystemService.enumerate_points(system, 1, horizon=2)
        self.assertEqual(BowenService.separated_count(system, K, 3, 0.5).value, 5)
        self.assertEqual(BowenService.spanning_count(system, K, 3, 0.5).value, 5)

    def test_window_too_small(self):
        K = SystemService.enumerate_points(self.system, 0)
        with self.assertRaises(WindowError):
            BowenService.separated_count(self.system, K, 1, 0.25)

    def test_single_point(self):
        result = BowenService.separated_count(self.system, self.K.subset([0]), 4, 0.25)
        self.assertEqual(result.value, 1)


class CirculantCountTests(SimpleTestCase):
    def setUp(self):
        self.system = make(SystemKind.CIRCLE_DOUBLING, resolution=16)
        self.K = SystemService.enumerate_points(self.system, 0)

    def test_closed_form(self):
        separated = BowenService.separated_count(self.system, self.K, 1, 0.2)
        spanning = BowenService.spanning_count(self.system, self.K, 1, 0.2)
        self.assertEqual(separated.method, CountMethod.CIRCULANT)
        self.assertEqual((separated.value, spanning.value), (4, 3))

    def test_agrees_with_branch_and_bound(self):
        for n in (1, 2):
            for separated in (True, False):
                closed = BowenService._circulant_count(self.system, self.K, n, 0.2, CountMode.EXACT, separated)
                dense = BowenService._dense_count(self.system, self.K, n, 0.2, CountMode.EXACT, separated)
                self.assertEqual(closed.value, dense.value)


class LatticeCountTests(SimpleTestCase):
    def setUp(self):
        self.system = make(SystemKind.INTERVAL_SHIFT, resolution=4)

    def test_per_coordinate(self):
        self.assertEqual(BowenService.lattice_separated_per_coordinate(4, 0.25), 2)
        self.assertEqual(BowenService.lattice_separated_per_coordinate(1024, 0.125), 8)
        self.assertEqual(BowenService.lattice_separated_per_coordinate(1024, 2 ** -6), 61)
        self.assertEqual(lattice_margin(0.25), 4)
        self.assertEqual(lattice_margin(2 ** -6), 8)

    def test_implicit_grid(self):
        K = SystemService.enumerate_points(self.system, 2, horizon=2, lazy=True, budget=16)
        separated = BowenService.separated_count(self.system, K, 3, 0.25)
        self.assertEqual((separated.value, separated.bound, separated.method), (8, Bound.LOWER_BOUND, CountMethod.LATTICE))
        spanning = BowenService.spanning_count(self.system, K, 3, 0.25)
        self.assertEqual((spanning.value, spanning.bound), (4 ** 7, Bound.UPPER_BOUND))

    def test_huge_grid_counts_without_enumerating(self):
        system = make(SystemKind.INTERVAL_SHIFT, resolution=1024, window=8)
        K = SystemService.enumerate_points(system, 8, horizon=7, lazy=True)
        self.assertEqual(BowenService.separated_count(system, K, 2, 0.125).value, 64)

    def test_separated_needs_orbit_coordinates(self):
        K = SystemService.enumerate_points(self.system, 0, lazy=True, budget=2)
        with self.assertRaises(WindowError):
            BowenService.separated_count(self.system, K, 3, 0.25)
