"""
Finite open covers, their dynamical joins U^n and the counts built on them.

A cover is a list of open balls checked against a reference point set;
every count here is "relative to K". On shift spaces equal-radius balls
are cylinders, so cell membership reduces to integer word codes and
joined cells are disjoint.
"""
import itertools
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from dynamics.exceptions import BudgetExceeded, CoverageError, DynamicsError, MassUnavailable, WindowError
from dynamics.models import (
    Bound,
    Cell,
    CountMethod,
    CountMode,
    CountResult,
    Cover,
    FinitePointSet,
    JoinedCover,
    MassEstimate,
    MassMethod,
    MeasureKind,
    Point,
    SystemKind,
)
from .budget_context import monte_carlo_draws
from .measure_service import InvariantMeasure, child_seed
from .solver_service import SolverService, sets_from_matrix
from .system_service import DynamicalSystem, SystemService, dyadic_radius

logger = logging.getLogger(__name__)

LEBESGUE_LADDER_STEPS = 40
UNION_DEPTH = 3
UNION_CELLS = 96


def _word_codes(block: np.ndarray, alphabet: int) -> np.ndarray:
    """One integer per row for a block of symbols."""
    if block.shape[1] * math.log2(max(alphabet, 2)) > 62:
        raise BudgetExceeded(f"words of length {block.shape[1]} do not fit a 64-bit code")
    powers = alphabet ** np.arange(block.shape[1] - 1, -1, -1, dtype=np.int64)
    return block.astype(np.int64) @ powers


def _arc(center: float, radius: float) -> List[Tuple[float, float]]:
    """Open circle arc (center - radius, center + radius) as intervals of [0, 1)."""
    if radius >= 0.5:
        return [(0.0, 1.0)]
    a, b = center - radius, center + radius
    if a < 0.0:
        return [(0.0, b), (a + 1.0, 1.0)]
    if b > 1.0:
        return [(0.0, b - 1.0), (a, 1.0)]
    return [(a, b)]


def _preimage(intervals: List[Tuple[float, float]], k: int) -> List[Tuple[float, float]]:
    """{x : 2^k x mod 1 in intervals}, sorted."""
    scale = 2.0 ** k
    return [((a + j) / scale, (b + j) / scale) for j in range(2 ** k) for a, b in intervals]


def _intersect(first: List[Tuple[float, float]], second: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    out = []
    i = j = 0
    while i < len(first) and j < len(second):
        a = max(first[i][0], second[j][0])
        b = min(first[i][1], second[j][1])
        if a < b:
            out.append((a, b))
        if first[i][1] < second[j][1]:
            i += 1
        else:
            j += 1
    return out


def _length(intervals: List[Tuple[float, float]]) -> float:
    return float(sum(b - a for a, b in intervals))


def inclusion_exclusion(pieces: List[List[Tuple[float, float]]]) -> float:
    """Lebesgue measure of a union from the measures of all intersections."""
    total = 0.0
    for size in range(1, len(pieces) + 1):
        for group in itertools.combinations(pieces, size):
            common = group[0]
            for other in group[1:]:
                common = _intersect(common, other)
            total += (-1) ** (size + 1) * _length(common)
    return total


class CoverService:
    """Build covers, join them along orbits and count their subcovers."""

    # -- construction -------------------------------------------------

    @staticmethod
    def cylinder_radius(cover: Cover) -> Optional[int]:
        """Common cylinder radius when every cell is an open ball of one dyadic size."""
        radii = {cell.radius for cell in cover.cells}
        if len(radii) != 1:
            return None
        return dyadic_radius(radii.pop(), strict=True)

    @classmethod
    def spanning_cover(cls, system: DynamicalSystem, K: FinitePointSet, eps: float) -> Cover:
        """
        Balls B(x, eps/2) over a greedy (1, eps/4)-spanning subset F of K.

        diam and leb_lower are measured on K and stored on the cover; a
        leb_lower below eps/4 is logged, not raised, since it only says the
        sample is coarse.

        Raises:
            CoverageError: some point of K is in no cell
        """
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        if not K.materialized or len(K) == 0:
            raise CoverageError("spanning covers need a nonempty materialized reference set")
        if system.symbolic:
            # first word of each (eps/4)-class, in lexicographic order
            start, stop = -dyadic_radius(eps / 4.0, strict=False), dyadic_radius(eps / 4.0, strict=False)
            labels = system.agreement_keys(K.values, K.lo, start, stop)
            _, chosen = np.unique(labels, return_index=True)
            chosen = np.sort(chosen)
        else:
            close = system.distance_matrix(K.values, K.lo, K.values, K.lo) <= eps / 4.0
            chosen = SolverService.greedy_set_cover(sets_from_matrix(close), (1 << len(K)) - 1)
            chosen = sorted(chosen)
        cells = tuple(Cell(center=K.point(int(i)), radius=eps / 2.0) for i in chosen)
        disjoint = system.symbolic and dyadic_radius(eps / 4.0, False) == dyadic_radius(eps / 2.0, True)
        draft = Cover(cells=cells, construction=f"spanning(eps={eps:g})", disjoint=disjoint)
        cls.membership(system, draft, K.values, K.lo, 0)
        diam, leb_lower = cls.cover_geometry(system, draft, K)
        if leb_lower < eps / 4.0:
            logger.warning("Lebesgue lower bound %s is below eps/4 = %s on this sample", leb_lower, eps / 4.0)
        logger.info("Spanning cover at eps=%s: %s cells, diam=%s, leb>=%s", eps, len(cells), diam, leb_lower)
        return Cover(
            cells=cells,
            construction=draft.construction,
            disjoint=disjoint,
            diam=diam,
            leb_lower=leb_lower,
        )

    @classmethod
    def cylinder_cover(cls, system: DynamicalSystem, generation: int, K: Optional[FinitePointSet] = None) -> Cover:
        """Partition into cylinders on |i| <= generation - 1 (generation 1 fixes x_0 only)."""
        if not system.symbolic:
            raise DynamicsError("cylinder covers exist on shift spaces only")
        if generation < 1:
            raise ValueError(f"generation must be at least 1, got {generation}")
        radius = generation - 1
        words = SystemService.enumerate_points(system, radius)
        cells = tuple(Cell(center=words.point(i), radius=2.0 ** -radius) for i in range(len(words)))
        cover = Cover(cells=cells, construction=f"cylinders(generation={generation})", disjoint=True)
        if K is None:
            return cover
        diam, leb_lower = cls.cover_geometry(system, cover, K)
        return Cover(cells=cells, construction=cover.construction, disjoint=True, diam=diam, leb_lower=leb_lower)

    # -- membership -----------------------------------------------------

    @classmethod
    def membership(cls, system: DynamicalSystem, cover: Cover, values: np.ndarray, lo: int, k: int) -> List[Tuple[int, ...]]:
        """
        Cells holding T^k of every row.

        Raises:
            CoverageError: a row lands in no cell
        """
        radius = cls.cylinder_radius(cover) if system.symbolic else None
        if radius is not None and (cover.disjoint or radius < 0):
            owners = cls._cylinder_owners(system, cover, values, lo, k, radius)
        else:
            moved, moved_lo = system.iterate_values(values, lo, k)
            centers = np.array([cell.center.values for cell in cover.cells], dtype=values.dtype)
            center_lo = cover.cells[0].center.lo
            radii = np.array([cell.radius for cell in cover.cells])
            inside = system.distance_matrix(moved, moved_lo, centers, center_lo) < radii[None, :]
            owners = [tuple(np.flatnonzero(row).tolist()) for row in inside]
        empty = [i for i, cells in enumerate(owners) if not cells]
        if empty:
            raise CoverageError(f"{len(empty)} reference points (first index {empty[0]}) lie in no cell at step {k}")
        return owners

    @classmethod
    def _cylinder_owners(cls, system, cover: Cover, values, lo, k, radius) -> List[Tuple[int, ...]]:
        if radius < 0:
            return [tuple(range(len(cover.cells)))] * values.shape[0]
        start, stop = k - radius, k + radius
        hi = lo + values.shape[1] - 1
        if start < lo or stop > hi:
            raise WindowError(
                f"step {k} needs coordinates [{start}, {stop}], window holds [{lo}, {hi}]",
                required=(start, stop),
            )
        codes = _word_codes(values[:, start - lo:stop - lo + 1], system.alphabet)
        center_words = np.array(
            [[cell.center.coordinate(i) for i in range(-radius, radius + 1)] for cell in cover.cells]
        )
        center_codes = _word_codes(center_words, system.alphabet)
        order = np.argsort(center_codes, kind="stable")
        sorted_codes = center_codes[order]
        position = np.searchsorted(sorted_codes, codes)
        position = np.minimum(position, len(sorted_codes) - 1)
        found = sorted_codes[position] == codes
        return [(int(order[p]),) if hit else () for p, hit in zip(position, found)]

    # -- joins ------------------------------------------------------------

    @classmethod
    def join_cover(cls, system: DynamicalSystem, cover: Cover, K: FinitePointSet, n: int) -> JoinedCover:
        """
        Realized itineraries of U^n = U v T^-1 U v ... v T^-(n-1) U on K.

        Raises:
            WindowError: K's window does not survive n - 1 steps
            BudgetExceeded: overlapping cells produce too many itineraries
        """
        if n < 1:
            raise ValueError(f"n must be at least 1, got {n}")
        per_step = [cls.membership(system, cover, K.values, K.lo, k) for k in range(n)]
        if all(len(cells) == 1 for owners in per_step for cells in owners):
            return cls._single_itineraries(cover, K, n, per_step)
        budget = settings.DYNAMICS_ITINERARY_BUDGET
        index = {}
        point_cells = []
        for p in range(len(K)):
            choices = [per_step[k][p] for k in range(n)]
            total = math.prod(len(c) for c in choices)
            if total > budget:
                raise BudgetExceeded(f"point {p} realizes {total} itineraries (budget {budget})", needed=total)
            realized = []
            for itinerary in itertools.product(*choices):
                if itinerary not in index:
                    index[itinerary] = len(index)
                    if len(index) > budget:
                        raise BudgetExceeded(f"more than {budget} itineraries at n={n}", needed=len(index))
                realized.append(index[itinerary])
            point_cells.append(tuple(realized))
        cells = [None] * len(index)
        for itinerary, position in index.items():
            cells[position] = itinerary
        members = [[] for _ in cells]
        for p, realized in enumerate(point_cells):
            for c in realized:
                members[c].append(p)
        logger.debug("Join at n=%s: %s itineraries over %s points", n, len(cells), len(K))
        return JoinedCover(
            base=cover,
            n=n,
            cells=tuple(cells),
            members=tuple(np.asarray(m, dtype=np.int64) for m in members),
            point_cells=tuple(point_cells),
        )

    @staticmethod
    def _single_itineraries(cover: Cover, K: FinitePointSet, n: int, per_step) -> JoinedCover:
        """Join when every point has one cell per step: one itinerary per point."""
        table = np.array([[cells[0] for cells in owners] for owners in per_step], dtype=np.int64).T
        rows, first, labels = np.unique(table, axis=0, return_index=True, return_inverse=True)
        labels = labels.reshape(-1)
        # keep itineraries in order of first appearance in K
        order = np.argsort(first, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        labels = rank[labels]
        members = np.split(np.argsort(labels, kind="stable"), np.cumsum(np.bincount(labels))[:-1])
        logger.debug("Join at n=%s: %s itineraries over %s points", n, rows.shape[0], len(K))
        return JoinedCover(
            base=cover,
            n=n,
            cells=tuple(tuple(int(c) for c in rows[i]) for i in order),
            members=tuple(members),
            point_cells=tuple((int(label),) for label in labels),
        )

    @staticmethod
    def minimal_subcover_count(joined: JoinedCover, K: FinitePointSet, mode: str = CountMode.EXACT) -> CountResult:
        """N(U^n) relative to K: fewest itinerary cells covering every point."""
        diagnostics = {"itineraries": len(joined), "size": len(K)}
        if all(len(cells) == 1 for cells in joined.point_cells):
            # every point sits in a single cell, so each realized cell is needed
            return CountResult(len(joined), Bound.EXACT, CountMethod.CLOSED_FORM, joined.n, math.nan, diagnostics)
        sets = [sum(1 << int(p) for p in members) for members in joined.members]
        universe = (1 << len(K)) - 1
        if mode == CountMode.GREEDY:
            value = len(SolverService.greedy_set_cover(sets, universe))
            return CountResult(value, Bound.UPPER_BOUND, CountMethod.GREEDY, joined.n, math.nan, diagnostics)
        value, nodes = SolverService.min_set_cover(sets, universe)
        diagnostics["nodes"] = nodes
        return CountResult(value, Bound.EXACT, CountMethod.BRANCH_AND_BOUND, joined.n, math.nan, diagnostics)

    # -- geometry -----------------------------------------------------

    @classmethod
    def cover_geometry(cls, system: DynamicalSystem, cover: Cover, K: FinitePointSet) -> Tuple[float, float]:
        """
        (diam, leb_lower) measured on K.

        diam is the largest distance between two points of K sharing a
        cell. leb_lower is the largest delta = r * 2^-j (r the largest cell
        radius) such that every closed ball B(p, delta), p in K, lies inside
        one cell.
        """
        owners = cls.membership(system, cover, K.values, K.lo, 0)
        radius = cls.cylinder_radius(cover) if system.symbolic else None
        if radius is not None and radius >= 0 and cover.disjoint:
            return cls._cylinder_geometry(system, K, radius, cover.cells[0].radius)
        if len(K) > settings.DYNAMICS_DENSE_LIMIT:
            raise BudgetExceeded(
                f"cover geometry on {len(K)} points exceeds the pairwise limit {settings.DYNAMICS_DENSE_LIMIT}",
                needed=len(K),
            )
        distances = system.distance_matrix(K.values, K.lo, K.values, K.lo)
        inside = np.zeros((len(K), len(cover.cells)), dtype=bool)
        for p, cells in enumerate(owners):
            inside[p, list(cells)] = True
        diam = 0.0
        for c in range(len(cover.cells)):
            rows = np.flatnonzero(inside[:, c])
            if rows.size > 1:
                diam = max(diam, float(distances[np.ix_(rows, rows)].max()))
        outside = (~inside).astype(np.int64)
        top = max(cell.radius for cell in cover.cells)
        for j in range(LEBESGUE_LADDER_STEPS):
            delta = top * 2.0 ** -j
            ball = (distances <= delta).astype(np.int64)
            escapes = ball @ outside
            if np.all((escapes == 0).any(axis=1)):
                return diam, delta
        return diam, 0.0

    @staticmethod
    def _cylinder_geometry(system: DynamicalSystem, K: FinitePointSet, radius: int, cell_radius: float) -> Tuple[float, float]:
        """Geometry of a cylinder partition from word classes on K alone."""

        def classes(level):
            if level < 0:
                return np.zeros(len(K), dtype=np.int64)
            return system.agreement_keys(K.values, K.lo, -level, level)

        cells = classes(radius)
        # two points of one cell first differ at the first level where the classes split
        diam, top = 0.0, min(-K.lo, K.hi)
        count = np.unique(cells).size
        for level in range(radius + 1, top + 1):
            if np.unique(classes(level)).size > count:
                diam = 2.0 ** -level
                break
        for j in range(LEBESGUE_LADDER_STEPS):
            delta = cell_radius * 2.0 ** -j
            level = dyadic_radius(delta, strict=False)
            if level >= radius:
                return diam, delta
            coarse = classes(level)
            pairs = np.unique(np.stack([coarse, cells], axis=1), axis=0).shape[0]
            if pairs == np.unique(coarse).size:
                return diam, delta
        return diam, 0.0

    # -- measure-weighted counts ----------------------------------------

    @classmethod
    def itinerary_words(cls, joined: JoinedCover, K: FinitePointSet) -> Tuple[int, np.ndarray]:
        """Cylinder (start, words) of the joined cells of a disjoint cylinder cover."""
        radius = cls.cylinder_radius(joined.base)
        start, stop = -radius, joined.n - 1 + radius
        if start < K.lo or stop > K.hi:
            raise WindowError(
                f"joined cells fix [{start}, {stop}], reference window is [{K.lo}, {K.hi}]",
                required=(start, stop),
            )
        first = np.array([members[0] for members in joined.members], dtype=np.int64)
        return start, K.values[first, start - K.lo:stop - K.lo + 1]

    @classmethod
    def shapira_count(
        cls,
        joined: JoinedCover,
        K: FinitePointSet,
        mu: InvariantMeasure,
        delta: float,
        mode: str = CountMode.EXACT,
        budget: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> CountResult:
        """
        N_mu(U^n, delta): fewest itinerary cells with union mass at least delta.

        Disjoint cylinder joins use exact cell masses. Overlapping arcs on the
        circle under Lebesgue are settled exactly when three cells or fewer
        reach delta; anything else scores cells on shared Monte Carlo atoms
        and solves a mass cover.

        Raises:
            MassUnavailable: no exact masses and a zero draw budget
        """
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        diagnostics = {"delta": delta, "itineraries": len(joined), "stderr": 0.0}
        system = mu.system
        radius = cls.cylinder_radius(joined.base) if system.symbolic else None
        if joined.base.disjoint and mu.cylinder_exact and radius is not None and radius >= 0:
            start, words = cls.itinerary_words(joined, K)
            masses = mu.cylinder_masses(words, start)
            value = SolverService.sorted_mass_count(masses, delta, strict=False, tolerance=1e-12)
            diagnostics["mass"] = float(sum(masses))
            if mode == CountMode.GREEDY:
                return CountResult(value, Bound.UPPER_BOUND, CountMethod.GREEDY, joined.n, math.nan, diagnostics)
            return CountResult(value, Bound.EXACT, CountMethod.CLOSED_FORM, joined.n, math.nan, diagnostics)
        pieces = cls.exact_cells(mu, joined) if len(joined) <= UNION_CELLS else None
        if pieces is not None:
            found = cls._small_union_count(pieces, delta)
            if found is not None:
                value, mass = found
                diagnostics.update({"mass": mass, "mass_method": MassMethod.EXACT, "union": "inclusion_exclusion"})
                return CountResult(value, Bound.EXACT, CountMethod.CLOSED_FORM, joined.n, math.nan, diagnostics)
            logger.debug("No union of %s cells reaches %s; sampling cell masses", UNION_DEPTH, delta)
        member, weights = cls._atom_membership(joined, K, mu, budget, seed, diagnostics)
        diagnostics["stderr"] = math.sqrt(delta * (1.0 - delta) / diagnostics["draws"])
        if mode == CountMode.GREEDY:
            value = len(SolverService.greedy_mass_cover(member, weights, delta, strict=False))
            return CountResult(value, Bound.UPPER_BOUND, CountMethod.GREEDY, joined.n, math.nan, diagnostics)
        value, nodes = SolverService.min_mass_cover(member, weights, delta, strict=False)
        diagnostics["nodes"] = nodes
        return CountResult(value, Bound.UPPER_BOUND, CountMethod.BRANCH_AND_BOUND, joined.n, math.nan, diagnostics)

    @staticmethod
    def exact_cells(mu: InvariantMeasure, joined: JoinedCover, cells: Optional[Sequence[int]] = None):
        """
        Joined cells as interval lists of [0, 1), or None without exact masses.

        Only Lebesgue on the circle qualifies: a joined cell is an arc
        intersected with preimages of arcs under the doubling map.
        """
        if mu.system.kind != SystemKind.CIRCLE_DOUBLING or mu.kind != MeasureKind.PRODUCT_LEBESGUE:
            return None
        arcs = [_arc(float(cell.center.values[0]), cell.radius) for cell in joined.base.cells]
        preimages = {}
        pieces = []
        for c in range(len(joined)) if cells is None else cells:
            itinerary = joined.cells[c]
            piece = arcs[itinerary[0]]
            for k in range(1, joined.n):
                key = (itinerary[k], k)
                if key not in preimages:
                    preimages[key] = _preimage(arcs[itinerary[k]], k)
                piece = _intersect(piece, preimages[key])
            pieces.append(piece)
        return pieces

    @classmethod
    def union_mass(
        cls,
        mu: InvariantMeasure,
        joined: JoinedCover,
        K: FinitePointSet,
        cells: Sequence[int],
        budget: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> MassEstimate:
        """
        Mass of a union of joined cells.

        Disjoint cylinder cells add up; overlapping cells with exact masses
        use inclusion-exclusion for up to three cells; the rest is sampled.
        """
        cells = list(cells)
        system = mu.system
        radius = cls.cylinder_radius(joined.base) if system.symbolic else None
        if joined.base.disjoint and mu.cylinder_exact and radius is not None and radius >= 0:
            start, words = cls.itinerary_words(joined, K)
            mass = float(mu.cylinder_masses(words[cells], start).sum())
            return MassEstimate(mass, 0.0, MassMethod.EXACT, mass, mass)
        if len(cells) <= UNION_DEPTH:
            pieces = cls.exact_cells(mu, joined, cells)
            if pieces is not None:
                mass = inclusion_exclusion(pieces)
                return MassEstimate(mass, 0.0, MassMethod.EXACT, mass, mass)
        diagnostics = {}
        member, weights = cls._atom_membership(joined, K, mu, budget, seed, diagnostics)
        p = float(weights[member[cells].any(axis=0)].sum())
        draws = diagnostics["draws"]
        stderr = math.sqrt(p * (1.0 - p) / draws)
        return MassEstimate(
            p, stderr, MassMethod.MONTE_CARLO, max(0.0, p - 3 * stderr), min(1.0, p + 3 * stderr),
            draws=draws, seed=diagnostics["seed"],
        )

    @staticmethod
    def _small_union_count(pieces, delta: float) -> Optional[Tuple[int, float]]:
        """Fewest cells (at most three) whose union reaches delta, with that union's mass."""
        masses = [_length(piece) for piece in pieces]
        order = sorted(range(len(pieces)), key=lambda c: (-masses[c], c))
        for size in range(1, UNION_DEPTH + 1):
            if sum(masses[c] for c in order[:size]) < delta - 1e-12:
                continue
            for group in itertools.combinations(order, size):
                if sum(masses[c] for c in group) < delta - 1e-12:
                    continue
                mass = inclusion_exclusion([pieces[c] for c in group])
                if SolverService.meets(mass, delta, strict=False, tolerance=1e-12):
                    return size, mass
        return None

    @classmethod
    def _atom_membership(cls, joined, K, mu, budget, seed, diagnostics):
        draws = monte_carlo_draws() if budget is None else int(budget)
        if draws <= 0:
            raise MassUnavailable("cell masses without an exact oracle need a positive draw budget")
        seed = mu.seed if seed is None else seed
        atoms = mu.sample(draws, K.lo, K.hi, child_seed(seed, 2))
        per_step = [cls._lenient_membership(mu.system, joined.base, atoms, K.lo, k) for k in range(joined.n)]
        lookup = {itinerary: c for c, itinerary in enumerate(joined.cells)}
        member = np.zeros((len(joined), draws), dtype=bool)
        for a in range(draws):
            for itinerary in itertools.product(*(per_step[k][a] for k in range(joined.n))):
                c = lookup.get(itinerary)
                if c is not None:
                    member[c, a] = True
        diagnostics.update({"draws": draws, "seed": seed})
        return member, np.full(draws, 1.0 / draws)

    @classmethod
    def _lenient_membership(cls, system, cover, values, lo, k):
        try:
            return cls.membership(system, cover, values, lo, k)
        except CoverageError:
            # atoms outside every cell simply carry no cell
            moved, moved_lo = system.iterate_values(values, lo, k)
            centers = np.array([cell.center.values for cell in cover.cells], dtype=values.dtype)
            radii = np.array([cell.radius for cell in cover.cells])
            inside = system.distance_matrix(moved, moved_lo, centers, cover.cells[0].center.lo) < radii[None, :]
            return [tuple(np.flatnonzero(row).tolist()) for row in inside]

    @classmethod
    def itinerary_mass(
        cls,
        mu: InvariantMeasure,
        cover: Cover,
        x: Point,
        n: int,
        budget: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> MassEstimate:
        """mu(U^n(x)): mass of the joined cell holding x (its first itinerary if several)."""
        system = mu.system
        values = np.asarray([x.values], dtype=np.int8 if system.symbolic else float)
        itinerary = tuple(cls.membership(system, cover, values, x.lo, k)[0][0] for k in range(n))
        radius = cls.cylinder_radius(cover) if system.symbolic else None
        if cover.disjoint and mu.cylinder_exact and radius is not None and radius >= 0:
            start = -radius
            word = [x.coordinate(i) for i in range(start, n + radius)]
            mass = mu.cylinder_mass(word, start)
            return MassEstimate(mass, 0.0, MassMethod.EXACT, mass, mass)
        draws = monte_carlo_draws() if budget is None else int(budget)
        if draws <= 0:
            raise MassUnavailable("itinerary masses without an exact oracle need a positive draw budget")
        seed = mu.seed if seed is None else seed
        atoms = mu.sample(draws, x.lo, x.hi, seed)
        hits = np.ones(draws, dtype=bool)
        for k in range(n):
            owners = cls._lenient_membership(system, cover, atoms, x.lo, k)
            hits &= np.array([itinerary[k] in cells for cells in owners])
        p = float(hits.mean())
        stderr = math.sqrt(p * (1.0 - p) / draws)
        return MassEstimate(
            p, stderr, MassMethod.MONTE_CARLO, max(0.0, p - 3 * stderr), min(1.0, p + 3 * stderr),
            draws=draws, seed=seed,
        )
