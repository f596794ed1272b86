"""
Growth rates of count ladders and the entropy / mean dimension estimators.

A limsup (liminf) is read as the max (min) of a per-step statistic over the
last tail_fraction of the n-ladder. Two statistics are kept for every
ladder: the running average (1/n) log c_n, which preserves the order of the
counts and is what inequality chains compare, and the increment
(log c_n' - log c_n) / (n' - n), which cancels additive offsets and is what
the estimators report by default.
"""
import logging
import math
from dataclasses import replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from scipy import stats

from dynamics.exceptions import BudgetExceeded, InsufficientData, WindowError
from dynamics.models import (
    Bound,
    CountMode,
    CountResult,
    Cover,
    FinitePointSet,
    LocalEntropyEstimate,
    MassMethod,
    MdimEstimate,
    Point,
    RateEstimate,
    RateMode,
    RateStatistic,
    SlopeFit,
    SystemKind,
)
from .bowen_service import BowenService, lattice_margin
from .cover_service import CoverService
from .measure_service import InvariantMeasure, MeasureService, child_seed
from .system_service import DynamicalSystem, dyadic_radius

logger = logging.getLogger(__name__)


def combine_bounds(tags: Iterable[str]) -> str:
    tags = set(tags)
    if not tags:
        return Bound.EXACT
    if len(tags) == 1:
        return tags.pop()
    tags.discard(Bound.EXACT)
    return tags.pop() if len(tags) == 1 else Bound.MIXED


def _median_iqr(values: Sequence[float]) -> Tuple[float, float]:
    ordered = np.sort(np.asarray(values, dtype=float))
    q1, median, q3 = np.percentile(ordered, [25, 50, 75])
    return float(median), float(q3 - q1)


class RateService:
    """Rates from ladders and the estimators built on them."""

    @staticmethod
    def _statistic(statistic: Optional[str]) -> str:
        return statistic or settings.DYNAMICS_RATE_STATISTIC

    @staticmethod
    def rate_from_counts(
        counts: Sequence[Tuple[int, float]],
        mode: str = RateMode.UPPER,
        tail_fraction: Optional[float] = None,
        statistic: str = RateStatistic.AVERAGE,
        bound: str = Bound.EXACT,
        diagnostics: Optional[dict] = None,
    ) -> RateEstimate:
        """
        Exponential growth rate (nats per step) of a count ladder.

        Raises:
            InsufficientData: fewer than three ladder entries
        """
        if len(counts) < 3:
            raise InsufficientData(f"need at least 3 ladder entries, got {len(counts)}")
        if mode not in RateMode.values:
            raise ValueError(f"unknown rate mode {mode!r}")
        tail_fraction = settings.DYNAMICS_TAIL_FRACTION if tail_fraction is None else tail_fraction
        ordered = sorted((int(n), float(value)) for n, value in counts)
        ns = np.array([n for n, _ in ordered], dtype=float)
        values = np.array([value for _, value in ordered])
        if np.any(values < 1.0 - 1e-9):
            raise ValueError(f"counts must be at least 1, got {values.min()}")
        if np.any(np.diff(ns) <= 0):
            raise ValueError("ladder entries need distinct n")
        logs = np.log(values)
        averages = logs / ns
        increments = np.diff(logs) / np.diff(ns)
        pick = np.max if mode == RateMode.UPPER else np.min

        def tail(series):
            size = max(1, math.ceil(tail_fraction * len(series)))
            return float(pick(series[-size:]))

        average_stat = tail(averages)
        increment_stat = tail(increments)
        fit = stats.linregress(ns, logs)
        residual = float(np.sqrt(np.mean((logs - (fit.intercept + fit.slope * ns)) ** 2)))
        value = increment_stat if statistic == RateStatistic.INCREMENT else average_stat
        extra = dict(diagnostics or {})
        extra.update({"averages": averages.tolist(), "increments": increments.tolist()})
        return RateEstimate(
            value=value,
            mode=mode,
            statistic=statistic,
            n_range=(int(ns[0]), int(ns[-1])),
            slope_fit=SlopeFit(float(fit.slope), float(fit.intercept), residual),
            tail_stat=value,
            average_stat=average_stat,
            increment_stat=increment_stat,
            counts=tuple(ordered),
            bound=bound,
            diagnostics=extra,
        )

    @classmethod
    def rate_from_results(cls, results: List[CountResult], mode, statistic, extra=None) -> RateEstimate:
        """Rate of a count ladder; the bound tag combines the tags of the counts."""
        counts = [(r.n, r.value) for r in results]
        diagnostics = {"methods": sorted({r.method for r in results})}
        diagnostics.update(extra or {})
        return cls.rate_from_counts(
            counts,
            mode=mode,
            statistic=cls._statistic(statistic),
            bound=combine_bounds(r.bound for r in results),
            diagnostics=diagnostics,
        )

    @classmethod
    def rate_from_katok_counts(cls, results: List[CountResult], mode, statistic, extra=None) -> RateEstimate:
        """
        Rate of a Katok ladder read from the fractional counts the cylinder
        path records; sampled counts enter as they are.
        """
        counts = [(r.n, max(float(r.diagnostics.get("fractional", r.value)), 1.0)) for r in results]
        diagnostics = {
            "methods": sorted({r.method for r in results}),
            "whole_counts": [[r.n, r.value] for r in results],
            "stderr": max((float(r.diagnostics.get("stderr", 0.0)) for r in results), default=0.0),
        }
        diagnostics.update(extra or {})
        return cls.rate_from_counts(
            counts,
            mode=mode,
            statistic=cls._statistic(statistic),
            bound=combine_bounds(r.bound for r in results),
            diagnostics=diagnostics,
        )

    # -- topological rates ------------------------------------------------

    @staticmethod
    def count(system, K, n, eps, kind: str, count_mode: str = CountMode.EXACT) -> CountResult:
        """One separated or spanning count; exact mode falls back to greedy over budget."""
        counter = BowenService.separated_count if kind == "separated" else BowenService.spanning_count
        try:
            return counter(system, K, n, eps, count_mode)
        except BudgetExceeded as error:
            if count_mode == CountMode.GREEDY:
                raise
            logger.warning("Exact %s count at n=%s, eps=%s over budget (%s); using greedy", kind, n, eps, error)
            return counter(system, K, n, eps, CountMode.GREEDY)

    @classmethod
    def growth_rate(
        cls,
        system: DynamicalSystem,
        K: FinitePointSet,
        eps: float,
        n_ladder: Sequence[int],
        kind: str = "separated",
        mode: str = RateMode.UPPER,
        statistic: Optional[str] = None,
        count_mode: str = CountMode.EXACT,
    ) -> RateEstimate:
        """S(K, eps) (kind separated) or R(K, eps) (kind spanning) over the n-ladder."""
        if kind not in ("separated", "spanning"):
            raise ValueError(f"unknown count kind {kind!r}")
        results = [cls.count(system, K, n, eps, kind, count_mode) for n in n_ladder]
        return cls.rate_from_results(results, mode, statistic, {"eps": eps, "kind": kind})

    @classmethod
    def mdim_estimate(
        cls,
        system: DynamicalSystem,
        K: FinitePointSet,
        eps_ladder: Sequence[float],
        n_ladder: Sequence[int],
        mode: str = RateMode.UPPER,
        statistic: Optional[str] = None,
        kind: str = "separated",
        count_mode: str = CountMode.EXACT,
    ) -> MdimEstimate:
        """
        Per-eps growth rates and their slope against log(1/eps).

        An eps at or below the sample spacing, or one whose counts need
        coordinates K does not hold, is dropped with a warning.
        """
        per_eps, dropped = [], []
        for eps in sorted(eps_ladder, reverse=True):
            if K.density is not None and K.density >= eps:
                logger.warning("Dropping eps=%s: sample spacing %s is not finer", eps, K.density)
                dropped.append(eps)
                continue
            try:
                per_eps.append((eps, cls.growth_rate(system, K, eps, n_ladder, kind, mode, statistic, count_mode)))
            except WindowError as error:
                logger.warning("Dropping eps=%s: %s", eps, error)
                dropped.append(eps)
        slope = intercept = None
        if len(per_eps) >= 3:
            fit = stats.linregress([math.log(1.0 / eps) for eps, _ in per_eps], [r.value for _, r in per_eps])
            slope, intercept = float(fit.slope), float(fit.intercept)
        else:
            logger.warning("Only %s eps values survived; no mean dimension slope", len(per_eps))
        return MdimEstimate(
            per_eps=tuple(per_eps), slope=slope, upper_lower=mode, intercept=intercept, dropped=tuple(dropped)
        )

    # -- measure-theoretic rates -----------------------------------------

    @classmethod
    def katok_entropy(
        cls,
        mu: InvariantMeasure,
        system: DynamicalSystem,
        eps: float,
        delta: float,
        n_ladder: Sequence[int],
        mode: str = RateMode.UPPER,
        statistic: Optional[str] = None,
        count_mode: str = CountMode.EXACT,
        variant: str = "ball",
        strict: bool = True,
        points: Optional[FinitePointSet] = None,
        budget: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> RateEstimate:
        """h_mu^K(eps, delta): growth of the Katok count (lower mode for the liminf)."""
        seed = mu.seed if seed is None else seed
        results = [
            MeasureService.katok_count(
                mu, system, n, eps, delta, variant, count_mode, points, strict, budget, child_seed(seed, n)
            )
            for n in n_ladder
        ]
        return cls.rate_from_katok_counts(results, mode, statistic, {"eps": eps, "delta": delta, "variant": variant})

    @staticmethod
    def _typical_points(mu: InvariantMeasure, system: DynamicalSystem, margin: int, top: int, count: int, seed: int) -> List[Point]:
        if system.kind == SystemKind.CIRCLE_DOUBLING:
            return mu.sample_points(count, 0, 0, seed)
        window = max(system.window, margin)
        return mu.sample_points(count, -window, window + top - 1, seed)

    @staticmethod
    def _rate_stderr(errors: Sequence[Tuple[int, float]], statistic: str) -> float:
        """
        Largest delta-method stderr of the per-step statistic along the
        ladder, from the stderr of each log mass (stderr / mass).
        """
        ns = np.array([n for n, _ in errors], dtype=float)
        spread = np.array([e for _, e in errors])
        if statistic == RateStatistic.INCREMENT:
            series = np.sqrt(spread[1:] ** 2 + spread[:-1] ** 2) / np.diff(ns)
        else:
            series = spread / ns
        return float(series.max()) if series.size else 0.0

    @classmethod
    def _local_rates(cls, points, masses_for, n_ladder, mode, statistic):
        per_point, intervals = [], []
        for x in points:
            counts, lower_counts, upper_counts, tags, errors = [], [], [], set(), []
            for n in n_ladder:
                estimate = masses_for(x, n)
                if estimate.value <= 0:
                    logger.warning("Ball mass 0 at n=%s for %s; dropping this n (undersampled)", n, x)
                    continue
                counts.append((n, 1.0 / estimate.value))
                errors.append((n, estimate.stderr / estimate.value))
                if estimate.method == MassMethod.BOX_BOUNDS:
                    lower_counts.append((n, 1.0 / estimate.upper))
                    upper_counts.append((n, 1.0 / estimate.lower))
                tags.add(Bound.EXACT if estimate.method == MassMethod.EXACT else Bound.MIXED)
            try:
                rate = cls.rate_from_counts(
                    counts, mode=mode, statistic=statistic, bound=combine_bounds(tags),
                    diagnostics={"stderr": cls._rate_stderr(errors, statistic)},
                )
            except InsufficientData:
                logger.warning("Too few positive masses for %s; point skipped", x)
                continue
            if upper_counts:
                low = cls.rate_from_counts(lower_counts, mode=mode, statistic=statistic).value
                high = cls.rate_from_counts(upper_counts, mode=mode, statistic=statistic).value
                intervals.append((low, high))
                rate = replace(rate, interval=(low, high))
            per_point.append((x, rate))
        return per_point, intervals

    @classmethod
    def _local_estimate(cls, per_point, intervals) -> LocalEntropyEstimate:
        if not per_point:
            raise InsufficientData("no point kept enough ladder entries")
        center, spread = _median_iqr([rate.value for _, rate in per_point])
        flagged = len(per_point) >= 8 and spread > settings.DYNAMICS_SPREAD_THRESHOLD
        if flagged:
            logger.warning("Local entropy spread %s exceeds %s", spread, settings.DYNAMICS_SPREAD_THRESHOLD)
        interval = None
        if intervals:
            interval = (min(low for low, _ in intervals), max(high for _, high in intervals))
        return LocalEntropyEstimate(
            per_point=tuple(per_point), center=center, spread=spread, flagged=flagged, interval=interval
        )

    @classmethod
    def brin_katok_entropy(
        cls,
        mu: InvariantMeasure,
        system: DynamicalSystem,
        eps: float,
        points: int,
        n_ladder: Sequence[int],
        mode: str = RateMode.UPPER,
        statistic: Optional[str] = None,
        budget: Optional[int] = None,
        seed: Optional[int] = None,
        centers: Optional[Sequence[Point]] = None,
    ) -> LocalEntropyEstimate:
        """
        h_mu^BK(eps): rate of -log mu(B_n(x, eps)) at mu-typical x, median over points.

        Box-path masses give each point an interval (rates of the outer and
        inner boxes) next to the geometric-mean value.
        """
        statistic = cls._statistic(statistic)
        seed = mu.seed if seed is None else seed
        if system.symbolic:
            margin = max(dyadic_radius(eps, strict=True), 0)
        elif system.kind == SystemKind.INTERVAL_SHIFT:
            margin = lattice_margin(eps)
        else:
            margin = 0
        if centers is None:
            centers = cls._typical_points(mu, system, margin, max(n_ladder), points, child_seed(seed, 3))

        def masses_for(x, n):
            return MeasureService.ball_mass(mu, system, x, n, eps, budget, child_seed(seed, 4, n))

        per_point, intervals = cls._local_rates(centers, masses_for, n_ladder, mode, statistic)
        return cls._local_estimate(per_point, intervals)

    @classmethod
    def cover_brin_katok_entropy(
        cls,
        mu: InvariantMeasure,
        system: DynamicalSystem,
        cover: Cover,
        points: int,
        n_ladder: Sequence[int],
        mode: str = RateMode.UPPER,
        statistic: Optional[str] = None,
        budget: Optional[int] = None,
        seed: Optional[int] = None,
        centers: Optional[Sequence[Point]] = None,
    ) -> LocalEntropyEstimate:
        """h_mu^BK(U): rate of -log mu(U^n(x)) over the joined cells of a cover."""
        statistic = cls._statistic(statistic)
        seed = mu.seed if seed is None else seed
        radius = CoverService.cylinder_radius(cover) if system.symbolic else None
        margin = max(radius or 0, 0)
        if centers is None:
            centers = cls._typical_points(mu, system, margin, max(n_ladder), points, child_seed(seed, 3))

        def masses_for(x, n):
            return CoverService.itinerary_mass(mu, cover, x, n, budget, child_seed(seed, 5, n))

        per_point, intervals = cls._local_rates(centers, masses_for, n_ladder, mode, statistic)
        return cls._local_estimate(per_point, intervals)

    @classmethod
    def shapira_entropy(
        cls,
        mu: InvariantMeasure,
        system: DynamicalSystem,
        cover: Cover,
        K: FinitePointSet,
        delta: float,
        n_ladder: Sequence[int],
        mode: str = RateMode.UPPER,
        statistic: Optional[str] = None,
        count_mode: str = CountMode.EXACT,
        budget: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> RateEstimate:
        """
        h_mu^S(U) as the growth of N_mu(U^n, delta), normalized by n.

        Both modes are computed; the other mode's value and the gap between
        them go into diagnostics.
        """
        seed = mu.seed if seed is None else seed
        results = []
        for n in n_ladder:
            joined = CoverService.join_cover(system, cover, K, n)
            results.append(
                CoverService.shapira_count(joined, K, mu, delta, count_mode, budget, child_seed(seed, 6, n))
            )
        other_mode = RateMode.LOWER if mode == RateMode.UPPER else RateMode.UPPER
        other = cls.rate_from_results(results, other_mode, statistic)
        rate = cls.rate_from_results(results, mode, statistic, {"delta": delta, "other_mode": other.value})
        return replace(rate, diagnostics={**rate.diagnostics, "mode_gap": abs(other.value - rate.value)})

    # -- local entropy function ------------------------------------------

    @classmethod
    def local_entropy_at(
        cls,
        system: DynamicalSystem,
        K: FinitePointSet,
        x: Point,
        eps: float,
        radius_ladder: Sequence[float],
        n_ladder: Sequence[int],
        kind: str = "separated",
        mode: str = RateMode.UPPER,
        statistic: Optional[str] = None,
    ) -> RateEstimate:
        """
        h_d(x, eps) proxy: min over rho of S(closed ball(x, rho) in K, eps).

        kind="spanning" gives the R-based variant.

        Raises:
            InsufficientData: every neighborhood in the ladder is empty
        """
        center = np.asarray([x.values], dtype=K.values.dtype)
        distances = system.distance_matrix(K.values, K.lo, center, x.lo)[:, 0]
        best, per_radius = None, {}
        for rho in sorted(radius_ladder, reverse=True):
            inside = np.flatnonzero(distances <= rho)
            if inside.size == 0:
                logger.warning("Neighborhood of radius %s is empty in the sample; dropped", rho)
                continue
            rate = cls.growth_rate(system, K.subset(inside), eps, n_ladder, kind, mode, statistic)
            per_radius[rho] = rate.value
            if best is None or rate.value < best.value:
                best = rate
        if best is None:
            raise InsufficientData("no neighborhood in the radius ladder meets the sample")
        return replace(best, diagnostics={**best.diagnostics, "per_radius": per_radius})
