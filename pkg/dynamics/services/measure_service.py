"""
Invariant measures, dynamical-ball masses and Katok covering counts.

Every random draw goes through child_seed(root, ...), so an estimate
depends on the root seed and its task path only, never on scheduling.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from dynamics.exceptions import DynamicsError, IncompatibleSpec, MassUnavailable, WindowError
from dynamics.models import (
    Bound,
    CountMethod,
    CountMode,
    CountResult,
    FinitePointSet,
    MassEstimate,
    MassMethod,
    MeasureKind,
    MeasureSpec,
    Point,
    SystemKind,
)
from .bowen_service import BowenService, lattice_margin
from .budget_context import monte_carlo_draws
from .solver_service import SolverService
from .system_service import DynamicalSystem, SystemService

logger = logging.getLogger(__name__)

ORBIT_PADDING = 64
KATOK_CENTERS = 512


def child_seed(root: int, *path: int) -> int:
    """Deterministic child seed for a task path under the root seed."""
    sequence = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(p) for p in path))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def shannon_entropy(weights: Sequence[float]) -> float:
    """-sum p log p in nats."""
    weights = np.asarray(weights, dtype=float)
    weights = weights[weights > 0]
    return float(-(weights * np.log(weights)).sum())


class InvariantMeasure:
    """
    A T-invariant measure with a seeded sampler.

    Exact masses: cylinders for bernoulli, parry and empirical measures on
    shift spaces, boxes for product Lebesgue, and any event for empirical
    measures (hits along the stored orbit divided by its length).
    """

    def __init__(self, spec: MeasureSpec, system: DynamicalSystem, seed: int):
        self.spec = spec
        self.kind = spec.kind
        self.system = system
        self.seed = int(seed)
        self.weights = np.asarray(spec.weights, dtype=float) if spec.weights else None
        self.transition = None
        self.stationary = None
        self.perron = None
        self.right = None
        self.allowed = None
        self.orbit = None
        self.orbit_length = 0

    def __repr__(self):
        return f"InvariantMeasure(kind={self.kind}, system={self.system.kind})"

    @property
    def cylinder_exact(self) -> bool:
        return self.system.symbolic and self.kind in (
            MeasureKind.BERNOULLI,
            MeasureKind.PARRY,
            MeasureKind.EMPIRICAL,
        )

    # -- exact masses -------------------------------------------------

    def cylinder_mass(self, word: Sequence[int], lo: int = 0) -> float:
        word = [int(s) for s in word]
        if not word:
            return 1.0
        if self.kind == MeasureKind.BERNOULLI:
            return float(np.prod(self.weights[word]))
        if self.kind == MeasureKind.PARRY:
            mass = self.stationary[word[0]]
            for a, b in zip(word, word[1:]):
                mass *= self.transition[a, b]
            return float(mass)
        if self.kind == MeasureKind.EMPIRICAL:
            windows = self.orbit_windows(lo, lo + len(word) - 1)
            return float(np.all(windows == np.asarray(word), axis=1).mean())
        raise MassUnavailable(f"{self.kind} has no cylinder masses")

    def cylinder_masses(self, words: np.ndarray, lo: int = 0) -> np.ndarray:
        """cylinder_mass for every row of a word matrix on [lo, lo + width)."""
        words = np.asarray(words, dtype=np.int64)
        if words.shape[1] == 0:
            return np.ones(words.shape[0])
        if self.kind == MeasureKind.BERNOULLI:
            return np.prod(self.weights[words], axis=1)
        if self.kind == MeasureKind.PARRY:
            masses = self.stationary[words[:, 0]]
            for column in range(1, words.shape[1]):
                masses = masses * self.transition[words[:, column - 1], words[:, column]]
            return masses
        if self.kind == MeasureKind.EMPIRICAL:
            windows = self.orbit_windows(lo, lo + words.shape[1] - 1).astype(np.int64)
            seen, counts = np.unique(windows, axis=0, return_counts=True)
            lookup = {row.tobytes(): count for row, count in zip(seen, counts)}
            return np.array([lookup.get(row.tobytes(), 0) for row in words], dtype=float) / self.orbit_length
        raise MassUnavailable(f"{self.kind} has no cylinder masses")

    def box_mass(self, intervals: Sequence[Tuple[float, float]], lo: int = 0) -> float:
        """Mass of the product of intervals on coordinates lo, lo+1, ... (clipped to [0,1])."""
        if self.kind == MeasureKind.PRODUCT_LEBESGUE:
            lengths = [max(0.0, min(1.0, b) - max(0.0, a)) for a, b in intervals]
            return float(np.prod(lengths)) if lengths else 1.0
        if self.kind == MeasureKind.EMPIRICAL and not self.system.symbolic:
            windows = self.orbit_windows(lo, lo + len(intervals) - 1)
            inside = np.ones(windows.shape[0], dtype=bool)
            for column, (a, b) in enumerate(intervals):
                inside &= (windows[:, column] >= a) & (windows[:, column] <= b)
            return float(inside.mean())
        raise MassUnavailable(f"{self.kind} has no box masses")

    def entropy(self) -> float:
        """Measure-theoretic entropy h_mu(T) where it is known in closed form."""
        if self.kind == MeasureKind.BERNOULLI:
            return shannon_entropy(self.weights)
        if self.kind == MeasureKind.PARRY:
            return float(math.log(self.perron))
        if self.kind == MeasureKind.PRODUCT_LEBESGUE:
            return math.log(2.0) if self.system.kind == SystemKind.CIRCLE_DOUBLING else math.inf
        raise MassUnavailable(f"entropy of {self.kind} is not known in closed form")

    # -- sampling -----------------------------------------------------

    def orbit_windows(self, lo: int, hi: int) -> np.ndarray:
        """Rows T^t x restricted to [lo, hi] for every stored orbit time t."""
        if self.orbit is None:
            raise MassUnavailable("no stored orbit")
        if self.system.kind == SystemKind.CIRCLE_DOUBLING:
            return self.orbit[:, None]
        if -lo > ORBIT_PADDING or hi > ORBIT_PADDING:
            raise WindowError(
                f"orbit windows reach only [-{ORBIT_PADDING}, {ORBIT_PADDING}], asked [{lo}, {hi}]",
                required=(lo, hi),
            )
        base = ORBIT_PADDING
        columns = [self.orbit[base + i:base + i + self.orbit_length] for i in range(lo, hi + 1)]
        return np.stack(columns, axis=1)

    def sample(self, count: int, lo: int, hi: int, seed: int) -> np.ndarray:
        """count mu-typical points on the window [lo, hi]."""
        rng = np.random.default_rng(seed)
        width = hi - lo + 1
        if self.kind == MeasureKind.EMPIRICAL:
            times = rng.integers(0, self.orbit_length, size=count)
            return self.orbit_windows(lo, hi)[times]
        if self.system.kind == SystemKind.CIRCLE_DOUBLING:
            return rng.random((count, 1))
        if self.kind == MeasureKind.PRODUCT_LEBESGUE:
            return rng.random((count, width))
        if self.kind == MeasureKind.BERNOULLI:
            return rng.choice(len(self.weights), size=(count, width), p=self.weights).astype(np.int8)
        # stationary Markov chain
        values = np.zeros((count, width), dtype=np.int8)
        values[:, 0] = rng.choice(len(self.stationary), size=count, p=self.stationary)
        cumulative = np.cumsum(self.transition, axis=1)
        for column in range(1, width):
            draws = rng.random(count)
            rows = cumulative[values[:, column - 1]]
            values[:, column] = np.minimum((draws[:, None] > rows).sum(axis=1), len(self.stationary) - 1)
        return values

    def sample_points(self, count: int, lo: int, hi: int, seed: int) -> List[Point]:
        values = self.sample(count, lo, hi, seed)
        point_lo = 0 if self.system.kind == SystemKind.CIRCLE_DOUBLING else lo
        return [Point(values=tuple(row.tolist()), lo=point_lo) for row in values]


class MeasureService:
    """Build measures and evaluate ball masses and Katok counts."""

    # -- construction -------------------------------------------------

    @staticmethod
    def _parry(measure: InvariantMeasure):
        system = measure.system
        if any(len(word) > 2 for word in system.forbidden):
            raise IncompatibleSpec("parry measure needs forbidden words of length at most 2")
        k = system.alphabet
        allowed = np.ones((k, k))
        for word in system.forbidden:
            if len(word) == 1:
                allowed[word[0], :] = 0
                allowed[:, word[0]] = 0
            else:
                allowed[word[0], word[1]] = 0
        eigenvalues, right = np.linalg.eig(allowed)
        index = int(np.argmax(eigenvalues.real))
        perron = float(eigenvalues[index].real)
        v = np.abs(right[:, index].real)
        eigenvalues_t, left = np.linalg.eig(allowed.T)
        u = np.abs(left[:, int(np.argmax(eigenvalues_t.real))].real)
        with np.errstate(divide="ignore", invalid="ignore"):
            measure.transition = np.nan_to_num(allowed * v[None, :] / (perron * v[:, None]))
        stationary = u * v
        measure.stationary = stationary / stationary.sum()
        measure.perron = perron
        measure.right = v
        measure.allowed = allowed.astype(np.int64)

    @staticmethod
    def _store_orbit(measure: InvariantMeasure, length: int):
        system = measure.system
        rng = np.random.default_rng(child_seed(measure.seed, 0))
        burn = int(math.ceil(measure.spec.burn_in * length))
        if system.kind == SystemKind.CIRCLE_DOUBLING:
            bits = rng.integers(0, 2, size=burn + length + 53)
            weights = np.ldexp(1.0, -np.arange(1, 54))
            windows = np.lib.stride_tricks.sliding_window_view(bits, 53)[burn:burn + length]
            measure.orbit = windows @ weights
        else:
            total = burn + length + 2 * ORBIT_PADDING
            if system.kind == SystemKind.INTERVAL_SHIFT:
                sequence = rng.random(total)
            elif system.kind == SystemKind.FULL_SHIFT:
                weights = measure.weights if measure.weights is not None else np.full(system.alphabet, 1.0 / system.alphabet)
                sequence = rng.choice(system.alphabet, size=total, p=weights).astype(np.int8)
            else:
                sequence = np.array(SystemService._random_word(system, total, rng), dtype=np.int8)
            measure.orbit = sequence[burn:]
        measure.orbit_length = length

    @classmethod
    def make_measure(cls, spec: MeasureSpec, system: DynamicalSystem, seed: int = 0) -> InvariantMeasure:
        """
        Build a measure compatible with the system.

        Raises:
            IncompatibleSpec: kind does not fit the system, or bad weights
        """
        if spec.kind not in MeasureKind.values:
            raise IncompatibleSpec(f"unknown measure kind {spec.kind!r}")
        measure = InvariantMeasure(spec, system, seed)
        if spec.kind == MeasureKind.BERNOULLI:
            if system.kind != SystemKind.FULL_SHIFT:
                raise IncompatibleSpec("bernoulli measures live on full shifts")
            if len(spec.weights) != system.alphabet:
                raise IncompatibleSpec(f"bernoulli needs {system.alphabet} weights, got {len(spec.weights)}")
            if min(spec.weights) < 0 or abs(sum(spec.weights) - 1.0) > 1e-12:
                raise IncompatibleSpec(f"bernoulli weights must be nonnegative and sum to 1, got {spec.weights}")
        elif spec.kind == MeasureKind.PARRY:
            if not system.symbolic:
                raise IncompatibleSpec("parry measures live on shift spaces")
            cls._parry(measure)
        elif spec.kind == MeasureKind.PRODUCT_LEBESGUE:
            if system.symbolic:
                raise IncompatibleSpec("product Lebesgue needs the interval shift or the circle")
        else:
            length = spec.orbit_length or monte_carlo_draws() or settings.DYNAMICS_MONTE_CARLO_DRAWS
            cls._store_orbit(measure, length)
        logger.debug("Built %s", measure)
        return measure

    # -- ball masses ----------------------------------------------------

    @staticmethod
    def interval_boxes(x: Point, n: int, eps: float) -> Tuple[List[Tuple[float, float]], int, List[Tuple[float, float]]]:
        """
        Boxes I_n inside B_n(x, eps) and J_n containing it.

        I_n fixes coordinates [-l, n-1+l] to within eps/6 (l = ceil(log2(4/eps))),
        J_n fixes [0, n-1] to within eps.
        """
        margin = lattice_margin(eps)
        if x.lo > -margin or x.hi < n - 1 + margin:
            raise WindowError(
                f"box bounds at eps={eps} need window [{-margin}, {n - 1 + margin}], "
                f"point holds [{x.lo}, {x.hi}]",
                required=(-margin, n - 1 + margin),
            )
        inner = [(x.coordinate(i) - eps / 6.0, x.coordinate(i) + eps / 6.0) for i in range(-margin, n + margin)]
        outer = [(x.coordinate(i) - eps, x.coordinate(i) + eps) for i in range(0, n)]
        return inner, -margin, outer

    @classmethod
    def ball_mass(
        cls,
        mu: InvariantMeasure,
        system: DynamicalSystem,
        x: Point,
        n: int,
        eps: float,
        budget: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> MassEstimate:
        """
        mu(B_n(x, eps)) with B_n the open dynamical ball.

        Exact on shift spaces (balls are cylinders) and for empirical
        measures; lower/upper box masses on the interval shift; Monte Carlo
        with binomial stderr otherwise.
        """
        if n < 1 or eps <= 0:
            raise ValueError(f"need n >= 1 and eps > 0, got n={n}, eps={eps}")
        if eps > system.diameter:
            return MassEstimate(1.0, 0.0, MassMethod.EXACT, 1.0, 1.0)
        if mu.cylinder_exact:
            start, stop = BowenService.agreement_range(eps, n, strict=True)
            if stop < start:
                return MassEstimate(1.0, 0.0, MassMethod.EXACT, 1.0, 1.0)
            if x.lo > start or x.hi < stop:
                raise WindowError(
                    f"ball of radius {eps} at n={n} is the cylinder on [{start}, {stop}]; "
                    f"point holds [{x.lo}, {x.hi}]",
                    required=(start, stop),
                )
            word = [x.coordinate(i) for i in range(start, stop + 1)]
            mass = mu.cylinder_mass(word, start)
            return MassEstimate(mass, 0.0, MassMethod.EXACT, mass, mass)
        if mu.kind == MeasureKind.EMPIRICAL:
            windows = mu.orbit_windows(x.lo, x.hi)
            lo = 0 if system.kind == SystemKind.CIRCLE_DOUBLING else x.lo
            hits = system.bowen_to(windows, lo, x, n) < eps
            mass = float(hits.mean())
            return MassEstimate(mass, 0.0, MassMethod.EXACT, mass, mass, draws=mu.orbit_length)
        if system.kind == SystemKind.INTERVAL_SHIFT and mu.kind == MeasureKind.PRODUCT_LEBESGUE:
            inner, inner_lo, outer = cls.interval_boxes(x, n, eps)
            lower = mu.box_mass(inner, inner_lo)
            upper = mu.box_mass(outer, 0)
            value = math.sqrt(lower * upper)
            return MassEstimate(value, 0.0, MassMethod.BOX_BOUNDS, lower, upper)
        if system.kind == SystemKind.CIRCLE_DOUBLING and mu.kind == MeasureKind.PRODUCT_LEBESGUE and eps <= 0.25:
            # for eps <= 1/4 the ball is the arc |y - x| < eps / 2^(n-1)
            mass = min(1.0, 2.0 * eps / 2.0 ** (n - 1))
            return MassEstimate(mass, 0.0, MassMethod.EXACT, mass, mass)
        return cls.monte_carlo_ball_mass(mu, system, x, n, eps, budget, seed)

    @classmethod
    def monte_carlo_ball_mass(cls, mu, system, x: Point, n: int, eps: float, budget=None, seed=None) -> MassEstimate:
        draws = monte_carlo_draws() if budget is None else int(budget)
        if draws <= 0:
            raise MassUnavailable("Monte Carlo ball mass needs a positive draw budget")
        seed = mu.seed if seed is None else seed
        samples = mu.sample(draws, x.lo, x.hi, seed)
        lo = 0 if system.kind == SystemKind.CIRCLE_DOUBLING else x.lo
        hits = system.bowen_to(samples, lo, x, n) < eps
        p = float(hits.mean())
        stderr = math.sqrt(p * (1.0 - p) / draws)
        return MassEstimate(
            p, stderr, MassMethod.MONTE_CARLO,
            max(0.0, p - 3 * stderr), min(1.0, p + 3 * stderr),
            draws=draws, seed=seed,
        )

    # -- cylinder mass classes ----------------------------------------

    @staticmethod
    def cylinder_mass_classes(mu: InvariantMeasure, start: int, stop: int) -> List[Tuple[float, int]]:
        """(mass, number of cylinders) over all admissible words on [start, stop]."""
        length = stop - start + 1
        if mu.kind == MeasureKind.BERNOULLI:
            classes: Dict[float, int] = {}
            k = len(mu.weights)

            def compositions(remaining, slots):
                if slots == 1:
                    yield (remaining,)
                    return
                for first in range(remaining + 1):
                    for rest in compositions(remaining - first, slots - 1):
                        yield (first,) + rest

            for counts in compositions(length, k):
                mass = float(np.prod([mu.weights[s] ** c for s, c in enumerate(counts)]))
                multiplicity = math.factorial(length)
                for c in counts:
                    multiplicity //= math.factorial(c)
                classes[mass] = classes.get(mass, 0) + multiplicity
            return sorted(classes.items(), reverse=True)
        if mu.kind == MeasureKind.PARRY:
            # mu[w] = pi_a v_b / (v_a lambda^(L-1)) depends on the end symbols a, b only
            k = len(mu.stationary)
            paths = np.identity(k, dtype=object)
            for _ in range(length - 1):
                paths = paths.dot(mu.allowed.astype(object))
            classes = {}
            for a in range(k):
                for b in range(k):
                    count = int(paths[a, b])
                    if count == 0 or mu.right[a] == 0:
                        continue
                    mass = float(mu.stationary[a] * mu.right[b] / (mu.right[a] * mu.perron ** (length - 1)))
                    classes[mass] = classes.get(mass, 0) + count
            return sorted(classes.items(), reverse=True)
        if mu.kind == MeasureKind.EMPIRICAL:
            windows = mu.orbit_windows(start, stop)
            _, counts = np.unique(windows, axis=0, return_counts=True)
            values, multiplicity = np.unique(counts / float(mu.orbit_length), return_counts=True)
            return sorted(zip(values.tolist(), multiplicity.tolist()), reverse=True)
        raise MassUnavailable(f"{mu.kind} has no cylinder masses")

    @staticmethod
    def sorted_class_count(classes: Sequence[Tuple[float, int]], target: float, strict: bool) -> Tuple[int, float, float]:
        """
        Fewest disjoint cells reaching the target, taking heavy classes first.

        The fractional count adds (target - mass so far) / cell mass for the
        last class instead of rounding; it grows like the count itself and
        does not jump with delta.

        Returns:
            (count, mass reached, fractional count)
        """
        total, running = 0, 0.0
        for mass, multiplicity in classes:
            if mass <= 0:
                continue
            needed = (target - running) / mass
            if strict:
                take = math.floor(needed) + 1
            else:
                take = max(math.ceil(needed), 0)
            # one step of float repair around exact multiples
            while take > 1 and SolverService.meets(running + (take - 1) * mass, target, strict):
                take -= 1
            while take <= multiplicity and not SolverService.meets(running + take * mass, target, strict):
                take += 1
            if take <= multiplicity:
                return total + max(take, 0), running + take * mass, total + max(needed, 0.0)
            total += multiplicity
            running += multiplicity * mass
        raise DynamicsError(f"cylinders reach mass {running:.6g} only, target {target}")

    # -- Katok counts ---------------------------------------------------

    @classmethod
    def katok_count(
        cls,
        mu: InvariantMeasure,
        system: DynamicalSystem,
        n: int,
        eps: float,
        delta: float,
        variant: str = "ball",
        mode: str = CountMode.EXACT,
        points: Optional[FinitePointSet] = None,
        strict: bool = True,
        budget: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> CountResult:
        """
        N_mu^delta(n, eps) (variant "ball") or N-tilde (variant "diameter").

        The ball count uses open (n, eps) balls. The diameter count uses sets
        of d_n-diameter below eps: on shift spaces the cylinders that hold
        them (see BowenService.diameter_range), elsewhere radius eps/2 balls.
        strict=True asks for union mass above delta, strict=False for at
        least delta.

        Raises:
            DynamicsError: the candidate family cannot reach the target mass
        """
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        if variant not in ("ball", "diameter"):
            raise ValueError(f"unknown variant {variant!r}")
        diagnostics = {"delta": delta, "variant": variant, "strict": strict, "stderr": 0.0}
        if eps > system.diameter:
            diagnostics["fractional"] = 1.0
            return CountResult(1, Bound.EXACT, CountMethod.CLOSED_FORM, n, eps, diagnostics)
        if mu.cylinder_exact:
            if variant == "diameter":
                start, stop = BowenService.diameter_range(eps, n)
            else:
                start, stop = BowenService.agreement_range(eps, n, strict=True)
            diagnostics["window"] = (start, stop)
            if stop < start:
                diagnostics["fractional"] = 1.0
                return CountResult(1, Bound.EXACT, CountMethod.CLOSED_FORM, n, eps, diagnostics)
            classes = cls.cylinder_mass_classes(mu, start, stop)
            value, reached, fractional = cls.sorted_class_count(classes, delta, strict)
            diagnostics.update({"mass": reached, "fractional": fractional})
            if mode == CountMode.GREEDY:
                # heaviest cylinder first is what greedy picks, so it meets the closed form
                diagnostics["requested"] = CountMode.GREEDY
            return CountResult(value, Bound.EXACT, CountMethod.CLOSED_FORM, n, eps, diagnostics)
        return cls._sampled_katok_count(mu, system, n, eps, delta, variant, mode, points, strict, budget, seed, diagnostics)

    @classmethod
    def _sampled_katok_count(cls, mu, system, n, eps, delta, variant, mode, points, strict, budget, seed, diagnostics):
        draws = monte_carlo_draws() if budget is None else int(budget)
        if draws <= 0:
            raise MassUnavailable("Katok counts without exact masses need a positive draw budget")
        seed = mu.seed if seed is None else seed
        if system.kind == SystemKind.CIRCLE_DOUBLING:
            lo, hi = 0, 0
        else:
            window = max(system.window, lattice_margin(eps))
            lo, hi = -window, window + n - 1
        atoms = mu.sample(draws, lo, hi, child_seed(seed, 1))
        centers = mu.sample(min(draws, KATOK_CENTERS), lo, hi, child_seed(seed, 0))
        if points is not None and points.materialized and points.lo == lo and points.hi == hi:
            centers = np.vstack([centers, points.values])
        centers = np.unique(centers, axis=0)
        radius = eps if variant == "ball" else eps / 2.0
        distance = np.zeros((centers.shape[0], atoms.shape[0]))
        for k in range(n):
            moved_c, c_lo = system.iterate_values(centers, lo, k)
            moved_a, a_lo = system.iterate_values(atoms, lo, k)
            np.maximum(distance, system.distance_matrix(moved_c, c_lo, moved_a, a_lo), out=distance)
        member = distance < radius
        weights = np.full(atoms.shape[0], 1.0 / atoms.shape[0])
        reachable = float(weights[member.any(axis=0)].sum())
        if not SolverService.meets(reachable, delta, strict):
            raise DynamicsError(
                f"candidate balls reach mass {reachable:.4f}, not {'above' if strict else 'at least'} {delta}"
            )
        diagnostics.update({
            "draws": draws,
            "seed": seed,
            "centers": int(centers.shape[0]),
            "radius": radius,
            # binomial stderr of a sampled union mass at the delta threshold
            "stderr": math.sqrt(delta * (1.0 - delta) / draws),
        })
        if mode == CountMode.GREEDY:
            value = len(SolverService.greedy_mass_cover(member, weights, delta, strict))
            method = CountMethod.GREEDY
        else:
            value, nodes = SolverService.min_mass_cover(member, weights, delta, strict)
            diagnostics["nodes"] = nodes
            method = CountMethod.BRANCH_AND_BOUND
        return CountResult(value, Bound.UPPER_BOUND, method, n, eps, diagnostics)

    # -- invariance check -------------------------------------------------

    @classmethod
    def invariance_check(
        cls,
        mu: InvariantMeasure,
        event_lo: int,
        event: Sequence,
        draws: int,
        seed: int,
    ) -> Tuple[float, float, float]:
        """
        Sampled mu(E) and mu(T^-1 E) for a cylinder word or box E on [event_lo, ...].

        On the circle E is a single arc [(a, b)] and event_lo is ignored.

        Returns:
            (mass of E, mass of T^-1 E, z-score of the difference)
        """
        width = len(event)
        samples = mu.sample(draws, event_lo, event_lo + width, seed)

        def hits(block):
            if mu.system.symbolic:
                return np.all(block == np.asarray(event), axis=1)
            lows = np.asarray([a for a, _ in event])
            highs = np.asarray([b for _, b in event])
            return np.all((block >= lows) & (block <= highs), axis=1)

        if mu.system.kind == SystemKind.CIRCLE_DOUBLING:
            p = float(hits(samples).mean())
            q = float(hits(np.ldexp(samples, 1) % 1.0).mean())
        else:
            p = float(hits(samples[:, :width]).mean())
            q = float(hits(samples[:, 1:width + 1]).mean())
        stderr = max(math.sqrt((p * (1 - p) + q * (1 - q)) / draws), 1.0 / draws)
        return p, q, (p - q) / stderr
