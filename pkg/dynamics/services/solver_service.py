"""
Exact and greedy combinatorial solvers behind the covering counts.

Graphs and set families are passed as Python-int bitmasks: bit j of
adjacency[i] is set when i and j are joined, bit e of sets[s] when set s
holds element e. Branch and bound keeps a node counter and raises
BudgetExceeded instead of running unbounded.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from dynamics.exceptions import BudgetExceeded, DynamicsError
from .budget_context import node_budget as default_node_budget

logger = logging.getLogger(__name__)


def _lowest_bit(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _row_mask(row: np.ndarray) -> int:
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


def _mask_row(mask: int, width: int) -> np.ndarray:
    raw = np.frombuffer(mask.to_bytes((width + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:width].astype(bool)


def adjacency_from_matrix(close: np.ndarray) -> List[int]:
    """Bitmask rows from a boolean matrix, diagonal dropped."""
    close = np.asarray(close, dtype=bool)
    return [_row_mask(row) & ~(1 << i) for i, row in enumerate(close)]


def sets_from_matrix(member: np.ndarray) -> List[int]:
    """Bitmask per row of a boolean (sets x elements) matrix."""
    return [_row_mask(row) for row in np.asarray(member, dtype=bool)]


class _Counter:
    def __init__(self, budget: int, problem: str):
        self.budget = budget
        self.problem = problem
        self.nodes = 0

    def tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded(
                f"{self.problem} exceeded the node budget of {self.budget}; use greedy mode",
                needed=self.nodes,
            )


class SolverService:
    """Maximum independent set, minimum set cover and minimum mass cover."""

    # -- independent sets --------------------------------------------------

    @staticmethod
    def greedy_independent_set(adjacency: Sequence[int]) -> List[int]:
        """First-fit in index order: a maximal independent set."""
        chosen = []
        blocked = 0
        for vertex in range(len(adjacency)):
            if not (blocked >> vertex) & 1:
                chosen.append(vertex)
                blocked |= adjacency[vertex] | (1 << vertex)
        return chosen

    @staticmethod
    def _clique_cover_bound(candidates: int, adjacency: Sequence[int]) -> int:
        """Number of cliques in a greedy clique partition; bounds any independent set."""
        count = 0
        remaining = candidates
        while remaining:
            vertex = _lowest_bit(remaining)
            clique = 1 << vertex
            pool = remaining & adjacency[vertex]
            while pool:
                other = _lowest_bit(pool)
                clique |= 1 << other
                pool &= adjacency[other]
            remaining &= ~clique
            count += 1
        return count

    @classmethod
    def max_independent_set(cls, adjacency: Sequence[int], node_budget: Optional[int] = None) -> Tuple[int, int]:
        """
        Exact maximum independent set size by branch and bound.

        Branches on the highest-degree candidate (include, then exclude),
        starts from the first-fit solution and prunes with a greedy clique
        partition bound.

        Returns:
            (size, nodes explored)
        """
        counter = _Counter(node_budget or default_node_budget(), "maximum independent set")
        best = len(cls.greedy_independent_set(adjacency))
        full = (1 << len(adjacency)) - 1

        def search(candidates: int, size: int):
            nonlocal best
            counter.tick()
            if not candidates:
                best = max(best, size)
                return
            if size + candidates.bit_count() <= best:
                return
            pivot, pivot_degree = -1, -1
            for vertex in _bits(candidates):
                degree = (adjacency[vertex] & candidates).bit_count()
                if degree > pivot_degree:
                    pivot, pivot_degree = vertex, degree
            if pivot_degree == 0:
                best = max(best, size + candidates.bit_count())
                return
            if size + cls._clique_cover_bound(candidates, adjacency) <= best:
                return
            search(candidates & ~adjacency[pivot] & ~(1 << pivot), size + 1)
            search(candidates & ~(1 << pivot), size)

        search(full, 0)
        return best, counter.nodes

    # -- set cover ------------------------------------------------------

    @staticmethod
    def greedy_set_cover(sets: Sequence[int], universe: int) -> List[int]:
        """Largest-gain greedy, lowest index on ties."""
        uncovered = universe
        chosen = []
        while uncovered:
            best_index, best_gain = -1, 0
            for index, members in enumerate(sets):
                gain = (members & uncovered).bit_count()
                if gain > best_gain:
                    best_index, best_gain = index, gain
            if best_index < 0:
                raise DynamicsError(f"{uncovered.bit_count()} elements lie in no set")
            chosen.append(best_index)
            uncovered &= ~sets[best_index]
        return chosen

    @classmethod
    def min_set_cover(cls, sets: Sequence[int], universe: int, node_budget: Optional[int] = None) -> Tuple[int, int]:
        """
        Exact minimum set cover size by branch and bound.

        Branches over the sets containing the uncovered element with the
        fewest options; bound is ceil(uncovered / largest remaining gain).

        Returns:
            (size, nodes explored)
        """
        counter = _Counter(node_budget or default_node_budget(), "minimum set cover")
        # identical sets never both appear in a minimum cover
        distinct = sorted(set(s for s in sets if s & universe), key=lambda s: (-s.bit_count(), s))
        best = len(cls.greedy_set_cover(distinct, universe))
        width = universe.bit_length()
        table = np.array(
            [_mask_row(s & universe, width) for s in distinct], dtype=bool
        ).reshape(len(distinct), width)
        owners = {element: [distinct[i] for i in np.flatnonzero(table[:, element])] for element in _bits(universe)}

        def search(uncovered: int, size: int):
            nonlocal best
            counter.tick()
            # a set that alone holds some element is in every cover
            forced = {owners[e][0] for e in _bits(uncovered) if len(owners[e]) == 1}
            for members in forced:
                uncovered &= ~members
            size += len(forced)
            if not uncovered:
                best = min(best, size)
                return
            largest = max((s & uncovered).bit_count() for s in distinct)
            needed = -(-uncovered.bit_count() // largest)
            if size + needed >= best:
                return
            element = min(_bits(uncovered), key=lambda e: len(owners[e]))
            options = sorted(owners[element], key=lambda s: -(s & uncovered).bit_count())
            for members in options:
                search(uncovered & ~members, size + 1)

        search(universe, 0)
        return best, counter.nodes

    # -- mass covers -------------------------------------------------------

    @staticmethod
    def meets(mass: float, target: float, strict: bool, tolerance: float = 0.0) -> bool:
        if strict:
            return mass > target + tolerance
        return mass >= target - tolerance

    @classmethod
    def sorted_mass_count(cls, masses: Sequence[float], target: float, strict: bool, tolerance: float = 0.0) -> int:
        """Fewest disjoint cells reaching the target: take the heaviest first."""
        ordered = np.sort(np.asarray(masses, dtype=float))[::-1]
        running = 0.0
        for count, mass in enumerate(ordered, start=1):
            running += mass
            if cls.meets(running, target, strict, tolerance):
                return count
        raise DynamicsError(
            f"all {len(ordered)} cells together reach mass {running:.6g}, "
            f"not {'above' if strict else 'at least'} {target}"
        )

    @classmethod
    def greedy_mass_cover(
        cls,
        member: np.ndarray,
        weights: np.ndarray,
        target: float,
        strict: bool,
        tolerance: float = 0.0,
    ) -> List[int]:
        """
        Add the set with the largest residual mass until the target is met.

        member is a boolean (sets x atoms) matrix; weights are atom masses.
        """
        covered = np.zeros(member.shape[1], dtype=bool)
        chosen = []
        mass = 0.0
        while not cls.meets(mass, target, strict, tolerance):
            residual = member[:, ~covered] @ weights[~covered]
            if chosen:
                residual[chosen] = -1.0
            index = int(np.argmax(residual))
            if residual[index] <= 0:
                raise DynamicsError(
                    f"the family reaches mass {mass:.6g}, not {'above' if strict else 'at least'} {target}"
                )
            chosen.append(index)
            covered |= member[index]
            mass = float(weights[covered].sum())
        return chosen

    @classmethod
    def min_mass_cover(
        cls,
        member: np.ndarray,
        weights: np.ndarray,
        target: float,
        strict: bool,
        tolerance: float = 0.0,
        node_budget: Optional[int] = None,
    ) -> Tuple[int, int]:
        """
        Exact fewest sets whose union mass meets the target.

        Include/exclude branching over sets in decreasing mass order; the
        bound assumes the remaining sets do not overlap.

        Returns:
            (size, nodes explored)
        """
        counter = _Counter(node_budget or default_node_budget(), "minimum mass cover")
        best = len(cls.greedy_mass_cover(member, weights, target, strict, tolerance))
        order = np.argsort(-(member @ weights), kind="stable")
        member = member[order]

        def search(position: int, covered: np.ndarray, size: int):
            nonlocal best
            counter.tick()
            mass = float(weights[covered].sum())
            if cls.meets(mass, target, strict, tolerance):
                best = min(best, size)
                return
            if size + 1 >= best or position >= member.shape[0]:
                return
            residual = np.sort(member[position:, ~covered] @ weights[~covered])[::-1]
            running, needed = mass, 0
            for gain in residual:
                if size + needed >= best - 1 or gain <= 0:
                    break
                running += gain
                needed += 1
                if cls.meets(running, target, strict, tolerance):
                    break
            if not cls.meets(running, target, strict, tolerance) or size + needed >= best:
                return
            search(position + 1, covered | member[position], size + 1)
            search(position + 1, covered, size)

        search(0, np.zeros(member.shape[1], dtype=bool), 0)
        return best, counter.nodes
