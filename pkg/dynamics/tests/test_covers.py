from django.test import SimpleTestCase

from dynamics.exceptions import CoverageError, DynamicsError
from dynamics.models import (
    Bound,
    Cell,
    Cover,
    CountMethod,
    CountMode,
    MassMethod,
    MeasureKind,
    MeasureSpec,
    Point,
    SystemKind,
    SystemSpec,
)
from dynamics.services import CoverService, MeasureService, SystemService
from dynamics.services.cover_service import inclusion_exclusion


def make(kind, **fields):
    return SystemService.make_system(SystemSpec(kind=kind, **fields))


class SymbolicCoverTests(SimpleTestCase):
    def setUp(self):
        self.system = make(SystemKind.FULL_SHIFT)
        self.K = SystemService.enumerate_points(self.system, 3, horizon=1)
        self.cover = CoverService.spanning_cover(self.system, self.K, 0.5)

    def test_spanning_cover_is_cylinder_partition(self):
        # cells are cylinders on |i| <= m + 1 at eps = 2^-m
        self.assertEqual(len(self.cover.cells), 32)
        self.assertTrue(self.cover.disjoint)
        self.assertEqual(CoverService.cylinder_radius(self.cover), 2)
        self.assertEqual(self.cover.diam, 0.125)
        self.assertEqual(self.cover.leb_lower, 0.125)

    def test_join_and_subcover(self):
        joined = CoverService.join_cover(self.system, self.cover, self.K, 2)
        self.assertEqual(len(joined), 64)
        result = CoverService.minimal_subcover_count(joined, self.K)
        self.assertEqual((result.value, result.bound, result.method), (64, Bound.EXACT, CountMethod.CLOSED_FORM))

    def test_membership_of_words(self):
        owners = CoverService.membership(self.system, self.cover, self.K.values, self.K.lo, 0)
        self.assertTrue(all(len(cells) == 1 for cells in owners))

    def test_generation_one_partition(self):
        partition = CoverService.cylinder_cover(self.system, 1)
        self.assertEqual(len(partition.cells), 2)
        self.assertTrue(partition.disjoint)

    def test_cylinder_cover_needs_shift_space(self):
        with self.assertRaises(DynamicsError):
            CoverService.cylinder_cover(make(SystemKind.CIRCLE_DOUBLING), 1)


class ShapiraCountTests(SimpleTestCase):
    def setUp(self):
        self.system = make(SystemKind.FULL_SHIFT)
        self.mu = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.BERNOULLI, weights=(0.5, 0.5)), self.system)
        self.partition = CoverService.cylinder_cover(self.system, 1)

    def test_partition_count_at_half(self):
        for n in (2, 3, 4):
            K = SystemService.enumerate_points(self.system, 0, horizon=n - 1)
            joined = CoverService.join_cover(self.system, self.partition, K, n)
            result = CoverService.shapira_count(joined, K, self.mu, 0.5)
            self.assertEqual(result.value, 2 ** (n - 1))
            self.assertEqual(result.bound, Bound.EXACT)

    def test_greedy_tag(self):
        K = SystemService.enumerate_points(self.system, 0, horizon=2)
        joined = CoverService.join_cover(self.system, self.partition, K, 3)
        result = CoverService.shapira_count(joined, K, self.mu, 0.3, CountMode.GREEDY)
        self.assertEqual((result.value, result.bound), (3, Bound.UPPER_BOUND))

    def test_itinerary_mass(self):
        x = Point(values=(0, 1, 1, 0), lo=0)
        mass = CoverService.itinerary_mass(self.mu, self.partition, x, 3)
        self.assertAlmostEqual(mass.value, 0.125)


class DenseCoverTests(SimpleTestCase):
    def setUp(self):
        self.system = make(SystemKind.CIRCLE_DOUBLING, resolution=16)
        self.K = SystemService.enumerate_points(self.system, 0)

    def test_spanning_cover_geometry(self):
        cover = CoverService.spanning_cover(self.system, self.K, 0.25)
        self.assertFalse(cover.disjoint)
        self.assertLessEqual(cover.diam, 0.25)
        self.assertGreater(cover.leb_lower, 0.0)
        owners = CoverService.membership(self.system, cover, self.K.values, self.K.lo, 0)
        self.assertTrue(all(owners))

    def test_subcover_of_overlapping_join(self):
        cover = CoverService.spanning_cover(self.system, self.K, 0.25)
        joined = CoverService.join_cover(self.system, cover, self.K, 2)
        exact = CoverService.minimal_subcover_count(joined, self.K)
        greedy = CoverService.minimal_subcover_count(joined, self.K, CountMode.GREEDY)
        self.assertLessEqual(exact.value, greedy.value)
        self.assertGreaterEqual(exact.value, 1)

    def test_implicit_reference_is_rejected(self):
        system = make(SystemKind.INTERVAL_SHIFT, resolution=4)
        K = SystemService.enumerate_points(system, 2, lazy=True, budget=4)
        with self.assertRaises(CoverageError):
            CoverService.spanning_cover(system, K, 0.25)


class InclusionExclusionTests(SimpleTestCase):
    def setUp(self):
        self.system = make(SystemKind.CIRCLE_DOUBLING, resolution=16)
        self.K = SystemService.enumerate_points(self.system, 0)
        self.mu = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.PRODUCT_LEBESGUE), self.system)
        # three quarter-radius arcs; the first wraps around 0
        cover = Cover(
            cells=tuple(Cell(center=Point(values=(c,), lo=0), radius=0.25) for c in (0.0, 0.3125, 0.625)),
            construction="arcs",
        )
        self.joined = CoverService.join_cover(self.system, cover, self.K, 1)

    def test_interval_unions(self):
        self.assertAlmostEqual(inclusion_exclusion([[(0.0, 0.5)], [(0.25, 0.75)]]), 0.75)
        self.assertAlmostEqual(inclusion_exclusion([[(0.0, 0.25), (0.75, 1.0)], [(0.5, 0.875)]]), 0.75)

    def test_joined_cells_follow_first_appearance(self):
        self.assertEqual(self.joined.cells, ((0,), (1,), (2,)))

    def test_union_mass_is_exact(self):
        pair = CoverService.union_mass(self.mu, self.joined, self.K, [0, 1])
        self.assertEqual(pair.method, MassMethod.EXACT)
        self.assertAlmostEqual(pair.value, 0.8125)
        self.assertAlmostEqual(CoverService.union_mass(self.mu, self.joined, self.K, [0, 2]).value, 0.875)
        self.assertAlmostEqual(CoverService.union_mass(self.mu, self.joined, self.K, [0, 1, 2]).value, 1.0)

    def test_shapira_count_on_overlapping_arcs(self):
        result = CoverService.shapira_count(self.joined, self.K, self.mu, 0.9)
        self.assertEqual((result.value, result.bound, result.method), (3, Bound.EXACT, CountMethod.CLOSED_FORM))
        self.assertEqual(result.diagnostics["union"], "inclusion_exclusion")
        self.assertEqual(result.diagnostics["stderr"], 0.0)
        result = CoverService.shapira_count(self.joined, self.K, self.mu, 0.85)
        self.assertEqual(result.value, 2)
        self.assertAlmostEqual(result.diagnostics["mass"], 0.875)

    def test_spanning_cover_of_the_circle(self):
        cover = CoverService.spanning_cover(self.system, self.K, 0.25)
        joined = CoverService.join_cover(self.system, cover, self.K, 1)
        result = CoverService.shapira_count(joined, self.K, self.mu, 0.5)
        self.assertEqual((result.value, result.bound), (2, Bound.EXACT))
        self.assertEqual(result.diagnostics["mass_method"], MassMethod.EXACT)

    def test_symbolic_measures_have_no_arcs(self):
        system = make(SystemKind.FULL_SHIFT)
        mu = MeasureService.make_measure(MeasureSpec(kind=MeasureKind.BERNOULLI, weights=(0.5, 0.5)), system)
        self.assertIsNone(CoverService.exact_cells(mu, self.joined))
