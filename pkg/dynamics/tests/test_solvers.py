import numpy as np
from django.test import SimpleTestCase

from dynamics.exceptions import BudgetExceeded, DynamicsError
from dynamics.services import SolverService
from dynamics.services.solver_service import adjacency_from_matrix, sets_from_matrix


def star(leaves):
    center = sum(1 << i for i in range(1, leaves + 1))
    return [center] + [1] * leaves


class IndependentSetTests(SimpleTestCase):
    def test_greedy_takes_first_fit(self):
        self.assertEqual(SolverService.greedy_independent_set(star(3)), [0])

    def test_exact_beats_greedy_on_star(self):
        size, nodes = SolverService.max_independent_set(star(3))
        self.assertEqual(size, 3)
        self.assertGreater(nodes, 0)

    def test_path(self):
        close = np.eye(5, k=1, dtype=bool) | np.eye(5, k=-1, dtype=bool)
        size, _ = SolverService.max_independent_set(adjacency_from_matrix(close))
        self.assertEqual(size, 3)

    def test_node_budget(self):
        with self.assertRaises(BudgetExceeded):
            SolverService.max_independent_set(star(3), node_budget=1)


class SetCoverTests(SimpleTestCase):
    # the large set lures greedy into a third pick
    SETS = [0b000111, 0b111000, 0b011011]
    UNIVERSE = 0b111111

    def test_greedy(self):
        self.assertEqual(len(SolverService.greedy_set_cover(self.SETS, self.UNIVERSE)), 3)

    def test_exact(self):
        size, _ = SolverService.min_set_cover(self.SETS, self.UNIVERSE)
        self.assertEqual(size, 2)

    def test_sets_alone_on_an_element_are_forced(self):
        # partition blocks plus two redundant subsets
        sets = [0b0011, 0b1100, 0b0001, 0b110000, 0b001000]
        size, nodes = SolverService.min_set_cover(sets, 0b111111)
        self.assertEqual((size, nodes), (3, 1))

    def test_uncovered_element(self):
        with self.assertRaises(DynamicsError):
            SolverService.greedy_set_cover([0b011], 0b111)


class MassCoverTests(SimpleTestCase):
    def test_sorted_count_strict_and_not(self):
        masses = [0.25, 0.5, 0.25]
        self.assertEqual(SolverService.sorted_mass_count(masses, 0.5, strict=True), 2)
        self.assertEqual(SolverService.sorted_mass_count(masses, 0.5, strict=False), 1)

    def test_sorted_count_unreachable(self):
        with self.assertRaises(DynamicsError):
            SolverService.sorted_mass_count([0.1, 0.2], 0.5, strict=False)

    def test_min_mass_cover(self):
        member = np.array([
            [1, 1, 0, 0],
            [0, 1, 1, 0],
            [0, 0, 1, 1],
        ], dtype=bool)
        weights = np.full(4, 0.25)
        size, _ = SolverService.min_mass_cover(member, weights, 0.75, strict=False)
        self.assertEqual(size, 2)
        size, _ = SolverService.min_mass_cover(member, weights, 0.5, strict=False)
        self.assertEqual(size, 1)
        greedy = SolverService.greedy_mass_cover(member, weights, 0.75, strict=True)
        self.assertEqual(len(greedy), 2)


class BitmaskTests(SimpleTestCase):
    def test_rows_pack_into_masks(self):
        member = np.random.default_rng(0).random((5, 70)) < 0.3
        expected = [sum(1 << int(j) for j in np.flatnonzero(row)) for row in member]
        self.assertEqual(sets_from_matrix(member), expected)

    def test_adjacency_drops_the_diagonal(self):
        close = np.ones((3, 3), dtype=bool)
        self.assertEqual(adjacency_from_matrix(close), [0b110, 0b101, 0b011])
