"""
Dynamical systems: symbolic shifts, the shift on [0,1]^Z and the doubling map.

Points of infinite products are truncated to explicit coordinate windows.
The shift relabels coordinates instead of moving data, so T^j x keeps the
same values with its window moved j places to the left; reading a
coordinate that the window does not hold raises WindowError.
"""
import itertools
import logging
import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from dynamics.exceptions import BudgetExceeded, IncompatibleSpec, WindowError
from dynamics.models import (
    SYMBOLIC_KINDS,
    Exactness,
    FinitePointSet,
    Point,
    SystemKind,
    SystemSpec,
)

logger = logging.getLogger(__name__)

MAX_ALPHABET = int(np.iinfo(np.int8).max)


def dyadic_radius(eps: float, strict: bool) -> int:
    """
    Radius r of the symbolic cylinder equal to a ball of radius eps.

    With d = 2^-min|i|, d <= eps iff the points agree on |i| <= r for
    r = ceil(log2(1/eps)) - 1, and d < eps iff they agree on |i| <= r for
    r = floor(log2(1/eps)). A result of -1 means the ball is everything.
    """
    if eps <= 0:
        raise ValueError(f"radius must be positive, got {eps}")
    mantissa, exponent = math.frexp(eps)  # eps = mantissa * 2**exponent
    power = mantissa == 0.5
    # floor(log2 eps) and ceil(log2 eps) without rounding surprises
    floor_log = exponent - 1
    ceil_log = floor_log if power else exponent
    if strict:
        radius = -ceil_log
    else:
        radius = -floor_log - 1
    return max(radius, -1)


class DynamicalSystem:
    """A compact metric space with its map, on truncated representations."""

    def __init__(self, spec: SystemSpec, forbidden: Tuple[Tuple[int, ...], ...] = ()):
        self.spec = spec
        self.kind = spec.kind
        self.alphabet = spec.alphabet
        self.forbidden = forbidden
        self.window = spec.window
        self.resolution = spec.resolution

    def __repr__(self):
        return f"DynamicalSystem(kind={self.kind}, alphabet={self.alphabet}, window={self.window})"

    @property
    def symbolic(self) -> bool:
        return self.kind in SYMBOLIC_KINDS

    @property
    def invertible(self) -> bool:
        return self.kind != SystemKind.CIRCLE_DOUBLING

    @property
    def diameter(self) -> float:
        if self.symbolic:
            return 1.0
        if self.kind == SystemKind.INTERVAL_SHIFT:
            return 3.0
        return 0.5

    def truncation_bound(self, radius: int) -> float:
        """Largest distance the coordinates beyond |i| > radius can add."""
        if self.symbolic:
            return 2.0 ** -(radius + 1)
        if self.kind == SystemKind.INTERVAL_SHIFT:
            return 2.0 ** (-radius + 1)
        return 0.0

    # -- admissibility -------------------------------------------------

    def is_admissible(self, word: Sequence[int]) -> bool:
        word = tuple(int(symbol) for symbol in word)
        if any(symbol < 0 or symbol >= self.alphabet for symbol in word):
            return False
        for pattern in self.forbidden:
            size = len(pattern)
            for start in range(len(word) - size + 1):
                if word[start:start + size] == pattern:
                    return False
        return True

    def admissible_rows(self, values: np.ndarray) -> np.ndarray:
        """Boolean mask of rows that contain no forbidden word."""
        keep = np.ones(values.shape[0], dtype=bool)
        for pattern in self.forbidden:
            size = len(pattern)
            for start in range(values.shape[1] - size + 1):
                block = values[:, start:start + size]
                keep &= ~np.all(block == np.asarray(pattern), axis=1)
        return keep

    # -- metric --------------------------------------------------------

    def _shared_radius(self, x: Point, y: Point) -> int:
        radius = min(x.radius, y.radius)
        if radius < 0:
            raise WindowError(
                f"windows [{x.lo}, {x.hi}] and [{y.lo}, {y.hi}] do not both hold coordinate 0",
                required=(0, 0),
            )
        return radius

    def distance(self, x: Point, y: Point) -> float:
        if self.kind == SystemKind.CIRCLE_DOUBLING:
            gap = abs(float(x.values[0]) - float(y.values[0])) % 1.0
            return min(gap, 1.0 - gap)
        radius = self._shared_radius(x, y)
        if self.symbolic:
            for t in range(radius + 1):
                if x.coordinate(t) != y.coordinate(t) or x.coordinate(-t) != y.coordinate(-t):
                    return 2.0 ** -t
            return 0.0
        total = 0.0
        for t in range(-radius, radius + 1):
            total += 2.0 ** -abs(t) * abs(float(x.coordinate(t)) - float(y.coordinate(t)))
        return total

    def distance_with_error(self, x: Point, y: Point) -> Tuple[float, float]:
        """Distance on the shared window and the bound on what truncation hides."""
        if self.kind == SystemKind.CIRCLE_DOUBLING:
            return self.distance(x, y), 0.0
        return self.distance(x, y), self.truncation_bound(self._shared_radius(x, y))

    def apply(self, x: Point, steps: int) -> Point:
        if steps < 0:
            raise ValueError("steps must be nonnegative")
        if steps == 0:
            return x
        if self.kind == SystemKind.CIRCLE_DOUBLING:
            return Point(values=(math.ldexp(float(x.values[0]), steps) % 1.0,), lo=0)
        if x.hi - steps < 0:
            raise WindowError(
                f"window [{x.lo}, {x.hi}] cannot survive {steps} shifts; "
                f"it must reach coordinate {steps}",
                required=(x.lo, steps),
            )
        return Point(values=x.values, lo=x.lo - steps)

    # -- vectorized helpers ---------------------------------------------

    def distance_matrix(self, a: np.ndarray, a_lo: int, b: np.ndarray, b_lo: int) -> np.ndarray:
        """d between every row of a (window starting a_lo) and every row of b."""
        if self.kind == SystemKind.CIRCLE_DOUBLING:
            gap = np.abs(a[:, 0][:, None] - b[:, 0][None, :]) % 1.0
            return np.minimum(gap, 1.0 - gap)
        a_hi = a_lo + a.shape[1] - 1
        b_hi = b_lo + b.shape[1] - 1
        radius = min(-a_lo, a_hi, -b_lo, b_hi)
        if radius < 0:
            raise WindowError(
                f"windows [{a_lo}, {a_hi}] and [{b_lo}, {b_hi}] do not both hold coordinate 0",
                required=(0, 0),
            )
        if self.symbolic:
            result = np.zeros((a.shape[0], b.shape[0]))
            undecided = np.ones_like(result, dtype=bool)
            for t in range(radius + 1):
                mismatch = a[:, t - a_lo][:, None] != b[:, t - b_lo][None, :]
                mismatch |= a[:, -t - a_lo][:, None] != b[:, -t - b_lo][None, :]
                hit = undecided & mismatch
                result[hit] = 2.0 ** -t
                undecided &= ~mismatch
            return result
        result = np.zeros((a.shape[0], b.shape[0]))
        for t in range(-radius, radius + 1):
            result += 2.0 ** -abs(t) * np.abs(a[:, t - a_lo][:, None] - b[:, t - b_lo][None, :])
        return result

    def iterate_values(self, values: np.ndarray, lo: int, steps: int) -> Tuple[np.ndarray, int]:
        """T^steps applied to every row; returns (values, lo)."""
        if self.kind == SystemKind.CIRCLE_DOUBLING:
            return np.ldexp(values, steps) % 1.0, 0
        hi = lo + values.shape[1] - 1
        if hi - steps < 0:
            raise WindowError(
                f"window [{lo}, {hi}] cannot survive {steps} shifts",
                required=(lo, steps),
            )
        return values, lo - steps

    def bowen_matrix(self, values: np.ndarray, lo: int, n: int) -> np.ndarray:
        """Pairwise d_n over a point array."""
        result = np.zeros((values.shape[0], values.shape[0]))
        for k in range(n):
            shifted, shifted_lo = self.iterate_values(values, lo, k)
            np.maximum(result, self.distance_matrix(shifted, shifted_lo, shifted, shifted_lo), out=result)
        return result

    def bowen_to(self, values: np.ndarray, lo: int, x: Point, n: int) -> np.ndarray:
        """d_n from every row to x."""
        center = np.asarray([x.values], dtype=values.dtype)
        result = np.zeros(values.shape[0])
        for k in range(n):
            shifted, shifted_lo = self.iterate_values(values, lo, k)
            moved, moved_lo = self.iterate_values(center, x.lo, k)
            np.maximum(result, self.distance_matrix(shifted, shifted_lo, moved, moved_lo)[:, 0], out=result)
        return result

    def agreement_keys(self, values: np.ndarray, lo: int, start: int, stop: int) -> np.ndarray:
        """
        Integer label per row for the word on absolute coordinates [start, stop].

        Rows share a label iff they agree there. An empty range labels every
        row 0.
        """
        if stop < start:
            return np.zeros(values.shape[0], dtype=np.int64)
        hi = lo + values.shape[1] - 1
        if start < lo or stop > hi:
            raise WindowError(
                f"coordinates [{start}, {stop}] are outside the window [{lo}, {hi}]",
                required=(start, stop),
            )
        block = values[:, start - lo:stop - lo + 1]
        _, labels = np.unique(block, axis=0, return_inverse=True)
        return labels.reshape(-1).astype(np.int64)


class SystemService:
    """Build systems, move points and enumerate finite stand-ins for X."""

    @staticmethod
    def _parse_forbidden(spec: SystemSpec) -> Tuple[Tuple[int, ...], ...]:
        words = []
        for word in spec.forbidden:
            if not word:
                raise IncompatibleSpec("forbidden words must be nonempty")
            try:
                symbols = tuple(int(ch) for ch in str(word))
            except ValueError:
                raise IncompatibleSpec(f"forbidden word {word!r} is not over digits 0..{spec.alphabet - 1}")
            if any(symbol >= spec.alphabet for symbol in symbols):
                raise IncompatibleSpec(f"forbidden word {word!r} leaves the alphabet 0..{spec.alphabet - 1}")
            words.append(symbols)
        return tuple(words)

    @classmethod
    def make_system(cls, spec: SystemSpec) -> DynamicalSystem:
        """
        Validate a SystemSpec and build the system.

        Raises:
            IncompatibleSpec: unknown kind, bad alphabet or forbidden words
            WindowError: window too small for the requested precision
        """
        if spec.kind not in SystemKind.values:
            raise IncompatibleSpec(f"unknown system kind {spec.kind!r}")
        if spec.alphabet < 1 or spec.window < 0 or spec.resolution < 1:
            raise IncompatibleSpec(
                f"alphabet, window and resolution must be positive "
                f"(got {spec.alphabet}, {spec.window}, {spec.resolution})"
            )
        if spec.kind in (SystemKind.FULL_SHIFT, SystemKind.SFT) and spec.alphabet > MAX_ALPHABET:
            raise IncompatibleSpec(
                f"alphabet {spec.alphabet} exceeds {MAX_ALPHABET}: symbols are stored as int8"
            )
        forbidden = ()
        if spec.kind == SystemKind.SFT:
            if not spec.forbidden:
                raise IncompatibleSpec("sft needs at least one forbidden word")
            forbidden = cls._parse_forbidden(spec)
        system = DynamicalSystem(spec, forbidden)
        if spec.precision is not None and system.kind != SystemKind.CIRCLE_DOUBLING:
            bound = system.truncation_bound(spec.window)
            if bound > spec.precision:
                if system.symbolic:
                    needed = max(0, math.ceil(math.log2(1.0 / spec.precision)) - 1)
                else:
                    needed = math.ceil(1 - math.log2(spec.precision))
                raise WindowError(
                    f"window {spec.window} leaves truncation error {bound:g} above precision "
                    f"{spec.precision:g}; need window >= {needed}",
                    required=(-needed, needed),
                )
        logger.debug("Built %s", system)
        return system

    @staticmethod
    def apply_map(system: DynamicalSystem, x: Point, steps: int) -> Point:
        return system.apply(x, steps)

    @staticmethod
    def grid_values(resolution: int) -> np.ndarray:
        """Midpoints (2i+1)/(2m) of the m equal cells of [0,1]."""
        return (2 * np.arange(resolution) + 1) / (2.0 * resolution)

    @classmethod
    def _symbolic_words(cls, system: DynamicalSystem, length: int, budget: int) -> np.ndarray:
        if system.kind == SystemKind.FULL_SHIFT:
            total = system.alphabet ** length
            if total > budget:
                raise BudgetExceeded(
                    f"enumeration would generate {total} words (budget {budget})",
                    needed=total,
                )
            if length == 0:
                return np.zeros((1, 0), dtype=np.int8)
            grid = itertools.product(range(system.alphabet), repeat=length)
            return np.array(list(grid), dtype=np.int8).reshape(total, length)
        words = np.zeros((1, 0), dtype=np.int8)
        for column in range(length):
            candidates = words.shape[0] * system.alphabet
            if candidates > budget:
                raise BudgetExceeded(
                    f"enumeration would generate at least {candidates} words at length "
                    f"{column + 1} of {length} (budget {budget})",
                    needed=candidates,
                )
            symbols = np.repeat(np.arange(system.alphabet, dtype=np.int8), words.shape[0])
            extended = np.hstack([np.tile(words, (system.alphabet, 1)), symbols[:, None]])
            keep = np.ones(extended.shape[0], dtype=bool)
            for pattern in system.forbidden:
                size = len(pattern)
                if size <= extended.shape[1]:
                    keep &= ~np.all(extended[:, -size:] == np.asarray(pattern), axis=1)
            words = extended[keep]
        order = np.lexsort(words.T[::-1]) if length else np.arange(words.shape[0])
        return words[order]

    @classmethod
    def enumerate_points(
        cls,
        system: DynamicalSystem,
        window: int,
        resolution: Optional[int] = None,
        horizon: int = 0,
        lazy: bool = False,
        budget: Optional[int] = None,
    ) -> FinitePointSet:
        """
        Enumerate a finite stand-in for X on coordinates [-window, window + horizon].

        Symbolic systems give every admissible word (lexicographic order);
        the interval shift gives the product grid of cell midpoints; the
        circle gives `resolution` equispaced points. With lazy=True an
        interval grid over budget comes back unmaterialized instead of
        raising.

        Raises:
            BudgetExceeded: the set would exceed the enumeration budget
        """
        budget = budget or settings.DYNAMICS_ENUMERATION_BUDGET
        resolution = resolution or system.resolution
        if system.kind == SystemKind.CIRCLE_DOUBLING:
            if resolution > budget:
                raise BudgetExceeded(f"enumeration would generate {resolution} points (budget {budget})", needed=resolution)
            values = (np.arange(resolution) / float(resolution))[:, None]
            return FinitePointSet(
                kind=system.kind,
                lo=0,
                hi=0,
                values=values,
                exactness=Exactness.GRID_SAMPLE,
                density=1.0 / (2 * resolution),
                resolution=resolution,
            )
        lo, hi = -window, window + horizon
        length = hi - lo + 1
        if system.symbolic:
            words = cls._symbolic_words(system, length, budget)
            return FinitePointSet(
                kind=system.kind,
                lo=lo,
                hi=hi,
                values=words,
                exactness=Exactness.EXACT_ENUMERATION,
                density=system.truncation_bound(window),
                resolution=system.alphabet,
            )
        total = resolution ** length
        values = None
        if total > budget:
            if not lazy:
                raise BudgetExceeded(
                    f"enumeration would generate {total} grid points (budget {budget})",
                    needed=total,
                )
            logger.debug("Grid of %s points on [%s, %s] left implicit", total, lo, hi)
        else:
            axis = cls.grid_values(resolution)
            values = np.array(list(itertools.product(axis, repeat=length))).reshape(total, length)
        return FinitePointSet(
            kind=system.kind,
            lo=lo,
            hi=hi,
            values=values,
            exactness=Exactness.GRID_SAMPLE,
            density=1.0 / (2 * resolution),
            resolution=resolution,
        )

    @classmethod
    def sample_points(
        cls,
        system: DynamicalSystem,
        count: int,
        seed: int,
        window: int,
        horizon: int = 0,
        resolution: Optional[int] = None,
    ) -> FinitePointSet:
        """Random points: grid cells for products, an orbit segment for the circle."""
        rng = np.random.default_rng(seed)
        if system.kind == SystemKind.CIRCLE_DOUBLING:
            bits = rng.integers(0, 2, size=count + 53)
            weights = np.ldexp(1.0, -np.arange(1, 54))
            values = np.array([bits[t:t + 53] @ weights for t in range(count)])[:, None]
            return FinitePointSet(
                kind=system.kind, lo=0, hi=0, values=values, exactness=Exactness.ORBIT_SAMPLE
            )
        lo, hi = -window, window + horizon
        length = hi - lo + 1
        if system.symbolic:
            rows = [cls._random_word(system, length, rng) for _ in range(count)]
            values = np.array(rows, dtype=np.int8).reshape(count, length)
            values = np.unique(values, axis=0)
            return FinitePointSet(
                kind=system.kind, lo=lo, hi=hi, values=values, exactness=Exactness.GRID_SAMPLE,
                resolution=system.alphabet,
            )
        resolution = resolution or system.resolution
        cells = rng.integers(0, resolution, size=(count, length))
        values = cls.grid_values(resolution)[cells]
        return FinitePointSet(
            kind=system.kind,
            lo=lo,
            hi=hi,
            values=values,
            exactness=Exactness.GRID_SAMPLE,
            resolution=resolution,
        )

    @staticmethod
    def _random_word(system: DynamicalSystem, length: int, rng) -> list:
        for _ in range(100):
            word = []
            tail = max((len(pattern) for pattern in system.forbidden), default=1)
            for _position in range(length):
                # the prefix is admissible, so only the last few symbols can clash
                recent = word[max(0, len(word) - tail + 1):] if tail > 1 else []
                allowed = [s for s in range(system.alphabet) if system.is_admissible(recent + [s])]
                if not allowed:
                    break
                word.append(int(rng.choice(allowed)))
            if len(word) == length:
                return word
        raise BudgetExceeded(f"could not draw an admissible word of length {length}")

    @staticmethod
    def point_set_from(system: DynamicalSystem, points: Iterable[Point], exactness=Exactness.GRID_SAMPLE) -> FinitePointSet:
        """Stack explicit points sharing one window into a FinitePointSet."""
        points = list(points)
        lo = points[0].lo
        if any(p.lo != lo or len(p.values) != len(points[0].values) for p in points):
            raise WindowError("points must share one window to form a point set")
        dtype = np.int8 if system.symbolic else float
        values = np.array([p.values for p in points], dtype=dtype)
        return FinitePointSet(
            kind=system.kind, lo=lo, hi=points[0].hi, values=values, exactness=exactness,
            resolution=system.alphabet if system.symbolic else None,
        )
