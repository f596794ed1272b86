"""
Bowen metrics and (n, eps) separated / spanning counts.

Counts go to the first engine that applies:
symbolic closed forms over agreement windows, circulant closed forms for
the doubling map on an equispaced grid, product lattices for interval-shift
grids too large to enumerate, and pairwise matrices with greedy or branch
and bound solvers for everything else.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from django.conf import settings

from dynamics.exceptions import BudgetExceeded, DynamicsError, WindowError
from dynamics.models import (
    Bound,
    CountMethod,
    CountMode,
    CountResult,
    FinitePointSet,
    Point,
    SystemKind,
)
from .solver_service import SolverService, adjacency_from_matrix, sets_from_matrix
from .system_service import DynamicalSystem, dyadic_radius

logger = logging.getLogger(__name__)

GUARD_BAND = 1e-12


def lattice_margin(eps: float) -> int:
    """l = ceil(log2(4/eps)): coordinates beyond |i| > l add at most eps/2."""
    return max(0, math.ceil(math.log2(4.0 / eps) - 1e-12))


class BowenService:
    """Bowen distances and covering counts on finite point sets."""

    @staticmethod
    def bowen_distance(system: DynamicalSystem, x: Point, y: Point, n: int) -> float:
        """d_n(x, y) = max over 0 <= k < n of d(T^k x, T^k y)."""
        if n < 1:
            raise ValueError(f"n must be at least 1, got {n}")
        return max(system.distance(system.apply(x, k), system.apply(y, k)) for k in range(n))

    # -- public counts ---------------------------------------------------

    @classmethod
    def separated_count(
        cls,
        system: DynamicalSystem,
        points: FinitePointSet,
        n: int,
        eps: float,
        mode: str = CountMode.EXACT,
    ) -> CountResult:
        """
        s_n(K, eps): largest subset of K pairwise more than eps apart in d_n.

        Greedy is first-fit over K's order (a lower bound); exact is a
        maximum independent set in the graph of pairs with d_n <= eps.
        """
        return cls._count(system, points, n, eps, mode, separated=True)

    @classmethod
    def spanning_count(
        cls,
        system: DynamicalSystem,
        points: FinitePointSet,
        n: int,
        eps: float,
        mode: str = CountMode.EXACT,
    ) -> CountResult:
        """
        r_n(K, eps): fewest centers in K with every point within eps in d_n.

        Greedy is a set cover by dynamical balls (an upper bound); exact is
        a minimum dominating set.
        """
        return cls._count(system, points, n, eps, mode, separated=False)

    @classmethod
    def _count(cls, system, points: FinitePointSet, n: int, eps: float, mode: str, separated: bool) -> CountResult:
        if n < 1 or eps <= 0:
            raise ValueError(f"need n >= 1 and eps > 0, got n={n}, eps={eps}")
        if points.size == 0:
            raise DynamicsError("point set is empty")
        if points.size == 1:
            return CountResult(1, Bound.EXACT, CountMethod.CLOSED_FORM, n, eps, {"size": 1})
        if system.kind == SystemKind.INTERVAL_SHIFT and (
            not points.materialized or points.size > settings.DYNAMICS_DENSE_LIMIT
        ):
            return cls._lattice_count(system, points, n, eps, separated)
        if not points.materialized:
            raise DynamicsError("only interval-shift grids may stay implicit")
        if system.symbolic:
            return cls._symbolic_count(system, points, n, eps, mode, separated)
        if system.kind == SystemKind.CIRCLE_DOUBLING and cls._is_equispaced(points):
            result = cls._circulant_count(system, points, n, eps, mode, separated)
            if result is not None:
                return result
        return cls._dense_count(system, points, n, eps, mode, separated)

    # -- symbolic closed form ----------------------------------------------

    @staticmethod
    def agreement_range(eps: float, n: int, strict: bool) -> Tuple[int, int]:
        """Absolute coordinates two points must share to be eps-close in d_n."""
        radius = dyadic_radius(eps, strict)
        if radius < 0:
            return 0, -1
        return -radius, n - 1 + radius

    @staticmethod
    def diameter_range(eps: float, n: int) -> Tuple[int, int]:
        """
        Window of the cylinders that hold every set of d_n-diameter below eps.

        Two points agreeing on [-r, n-1+r] but not one step further out are
        2^-(r+1) apart, so r is the least radius with 2^-(r+1) < eps.
        """
        if eps <= 0:
            raise ValueError(f"diameter bound must be positive, got {eps}")
        radius = -1
        while 2.0 ** -(radius + 1) >= eps:
            radius += 1
        if radius < 0:
            return 0, -1
        return -radius, n - 1 + radius

    @classmethod
    def symbolic_classes(cls, system, points: FinitePointSet, n: int, eps: float, strict: bool = False) -> np.ndarray:
        """Class label per point; same label iff d_n <= eps (or < eps when strict)."""
        start, stop = cls.agreement_range(eps, n, strict)
        return system.agreement_keys(points.values, points.lo, start, stop)

    @classmethod
    def _symbolic_count(cls, system, points, n, eps, mode, separated) -> CountResult:
        labels = cls.symbolic_classes(system, points, n, eps)
        classes = int(np.unique(labels).size)
        diagnostics = {"size": len(points), "window": cls.agreement_range(eps, n, False)}
        if mode == CountMode.GREEDY:
            # first-fit keeps one word per class, so greedy meets the closed form
            diagnostics["requested"] = CountMode.GREEDY
            return CountResult(classes, Bound.EXACT, CountMethod.CLOSED_FORM, n, eps, diagnostics)
        if len(points) <= settings.DYNAMICS_CROSS_CHECK_LIMIT:
            checked = cls._dense_count(system, points, n, eps, CountMode.EXACT, separated)
            if checked.value != classes:
                raise DynamicsError(
                    f"closed form {classes} disagrees with branch and bound {checked.value} "
                    f"(n={n}, eps={eps})"
                )
            diagnostics["cross_checked"] = True
        return CountResult(classes, Bound.EXACT, CountMethod.CLOSED_FORM, n, eps, diagnostics)

    # -- circulant closed form ---------------------------------------------

    @staticmethod
    def _is_equispaced(points: FinitePointSet) -> bool:
        if not points.resolution or len(points) != points.resolution:
            return False
        expected = np.arange(points.resolution) / float(points.resolution)
        return bool(np.array_equal(points.values[:, 0], expected))

    @staticmethod
    def circle_offset_distances(resolution: int, n: int) -> np.ndarray:
        """d_n(0, j/m) for every offset j, in units of 1/m (exact integers)."""
        offsets = np.arange(resolution, dtype=np.int64)
        worst = np.zeros(resolution, dtype=np.int64)
        for k in range(n):
            moved = (offsets * pow(2, k, resolution)) % resolution
            np.maximum(worst, np.minimum(moved, resolution - moved), out=worst)
        return worst

    @classmethod
    def _circulant_count(cls, system, points, n, eps, mode, separated) -> Optional[CountResult]:
        m = points.resolution
        worst = cls.circle_offset_distances(m, n)
        close = worst <= eps * m
        reach = 0
        while reach + 1 < m and close[reach + 1]:
            reach += 1
        contiguous = np.array_equal(np.flatnonzero(close), np.union1d(np.arange(reach + 1), (m - np.arange(reach + 1)) % m))
        if not contiguous:
            return None
        diagnostics = {"size": m, "reach": int(reach)}
        if 2 * reach + 1 >= m:
            return CountResult(1, Bound.EXACT, CountMethod.CIRCULANT, n, eps, diagnostics)
        if mode == CountMode.GREEDY:
            if separated:
                value = len(range(0, m - reach, reach + 1))
                return CountResult(value, Bound.LOWER_BOUND, CountMethod.GREEDY, n, eps, diagnostics)
            # sweep: the first uncovered index u gets the center u + reach
            covered_to, value = reach, 1
            while covered_to < m - reach - 1:
                covered_to += 2 * reach + 1
                value += 1
            return CountResult(value, Bound.UPPER_BOUND, CountMethod.GREEDY, n, eps, diagnostics)
        if separated:
            value = m // (reach + 1)
        else:
            value = -(-m // (2 * reach + 1))
        return CountResult(value, Bound.EXACT, CountMethod.CIRCULANT, n, eps, diagnostics)

    # -- interval-shift lattices --------------------------------------------

    @staticmethod
    def lattice_separated_per_coordinate(resolution: int, eps: float) -> int:
        """Most grid midpoints pairwise more than eps apart."""
        step = math.floor(eps * resolution + GUARD_BAND) + 1
        return (resolution - 1) // step + 1

    @staticmethod
    def lattice_spanning_per_coordinate(resolution: int, radius: float) -> int:
        """Fewest grid midpoints with every midpoint within radius of one."""
        group = 2 * math.floor(radius * resolution + GUARD_BAND) + 1
        return -(-resolution // group)

    @classmethod
    def _lattice_count(cls, system, points: FinitePointSet, n: int, eps: float, separated: bool) -> CountResult:
        m = points.resolution or system.resolution
        if separated:
            if points.lo > 0 or points.hi < n - 1:
                raise WindowError(
                    f"lattice needs coordinates [0, {n - 1}] inside [{points.lo}, {points.hi}]",
                    required=(0, n - 1),
                )
            per = cls.lattice_separated_per_coordinate(m, eps)
            value = per ** n
            diagnostics = {"per_coordinate": per, "coordinates": n, "resolution": m}
            return CountResult(value, Bound.LOWER_BOUND, CountMethod.LATTICE, n, eps, diagnostics)
        margin = lattice_margin(eps)
        start, stop = max(points.lo, -margin), min(points.hi, n - 1 + margin)
        coordinates = max(0, stop - start + 1)
        per = cls.lattice_spanning_per_coordinate(m, eps / 6.0)
        diagnostics = {"per_coordinate": per, "coordinates": coordinates, "margin": margin, "resolution": m}
        return CountResult(per ** coordinates, Bound.UPPER_BOUND, CountMethod.LATTICE, n, eps, diagnostics)

    # -- dense matrices ---------------------------------------------------

    @classmethod
    def _dense_count(cls, system, points, n, eps, mode, separated) -> CountResult:
        size = len(points)
        if size > settings.DYNAMICS_DENSE_LIMIT:
            raise BudgetExceeded(
                f"{size} points exceed the pairwise limit {settings.DYNAMICS_DENSE_LIMIT}",
                needed=size,
            )
        distances = system.bowen_matrix(points.values, points.lo, n)
        tolerance = 0.0 if system.symbolic else GUARD_BAND
        ambiguous = bool(np.any(np.abs(distances - eps) <= tolerance)) if tolerance else False
        diagnostics = {"size": size, "ambiguous_pairs": ambiguous}
        if separated:
            # pairs inside the guard band count as close: fewer separated points
            close = distances <= eps + tolerance
            adjacency = adjacency_from_matrix(close)
            if mode == CountMode.GREEDY:
                value = len(SolverService.greedy_independent_set(adjacency))
                return CountResult(value, Bound.LOWER_BOUND, CountMethod.GREEDY, n, eps, diagnostics)
            value, nodes = SolverService.max_independent_set(adjacency)
            diagnostics["nodes"] = nodes
            bound = Bound.LOWER_BOUND if ambiguous else Bound.EXACT
            return CountResult(value, bound, CountMethod.BRANCH_AND_BOUND, n, eps, diagnostics)
        # pairs inside the guard band do not count as covered: more centers
        member = distances <= eps - tolerance
        sets = sets_from_matrix(member)
        universe = (1 << size) - 1
        if mode == CountMode.GREEDY:
            value = len(SolverService.greedy_set_cover(sets, universe))
            return CountResult(value, Bound.UPPER_BOUND, CountMethod.GREEDY, n, eps, diagnostics)
        value, nodes = SolverService.min_set_cover(sets, universe)
        diagnostics["nodes"] = nodes
        bound = Bound.UPPER_BOUND if ambiguous else Bound.EXACT
        return CountResult(value, bound, CountMethod.BRANCH_AND_BOUND, n, eps, diagnostics)
