"""
Finite-level inequality chains and the interval-shift example.

Every chain instance stores (left, middle, right) with left <= middle <= right
expected; one-sided checks repeat the middle value on the right. Exact
verdicts need exact-tagged inputs end to end; anything built from bounds or
from finite-n behavior that no inequality controls is reported only.
Statistical instances put the 3-stderr band in left/right and the sampled
value in the middle.
"""
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from dynamics.exceptions import BudgetExceeded, DynamicsError, IncompatibleSpec, WindowError
from dynamics.models import (
    Bound,
    ChainInstance,
    ChainReport,
    CountMode,
    Cover,
    ExampleReport,
    ExampleRow,
    ExperimentConfig,
    FinitePointSet,
    MeasureKind,
    MeasureSpec,
    RateMode,
    RateStatistic,
    SuiteInstance,
    SystemKind,
    Verdict,
)
from .bowen_service import lattice_margin
from .budget_context import active_budgets
from .cover_service import CoverService
from .measure_service import InvariantMeasure, MeasureService, child_seed
from .rate_service import RateService
from .system_service import DynamicalSystem, SystemService, dyadic_radius

logger = logging.getLogger(__name__)

CHAIN_ORDER = (
    "bowen_chain",
    "rate_chain",
    "greedy_sandwich",
    "cover_entropy_chain",
    "katok_diameter_chain",
    "shapira_katok_count_chain",
    "katok_shapira_rate_chain",
    "lower_katok_shapira_rate_chain",
    "brin_katok_cover_chain",
    "lower_brin_katok_cover_chain",
    "katok_lower_brin_katok_chain",
    "local_entropy_chain",
    "partition_identity",
    "theorem_sandwich",
    "lower_katok_open_problem",
    "invariance",
    "mass_vs_monte_carlo",
    "job_errors",
)

EXACT_SLACK = 1e-12
STATISTICAL_Z = 3.0
LOCAL_TOLERANCE = 1e-6
IDENTITY_TOLERANCE = 0.02
SANDWICH_SLACK = 0.05
LOWER_KATOK_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)
SAMPLED_REFERENCE_POINTS = 24
MASS_CHECK_POINTS = 2

# seed paths under (root, instance position)
_SEED_SAMPLE, _SEED_MEASURE, _SEED_CENTERS, _SEED_PICKS, _SEED_STATISTICAL, _SEED_KATOK = range(6)


def _chain_instance(parameters, left, middle, right, exact: bool, tolerance: float = EXACT_SLACK) -> ChainInstance:
    holds = left <= middle + tolerance and middle <= right + tolerance
    if not exact:
        verdict = Verdict.PROBE
    elif holds:
        verdict = Verdict.EXACT_PASS
    else:
        verdict = Verdict.FAIL
        logger.warning("Chain violated at %s: %s <= %s <= %s", parameters, left, middle, right)
    return ChainInstance(dict(parameters, holds=bool(holds)), float(left), float(middle), float(right), verdict)


def _statistical_instance(parameters, reference: float, sampled: float, stderr: float) -> ChainInstance:
    z = (sampled - reference) / stderr
    verdict = Verdict.STATISTICAL_PASS if abs(z) <= STATISTICAL_Z else Verdict.FAIL
    if verdict == Verdict.FAIL:
        logger.warning("Statistical check off by z=%.2f at %s", z, parameters)
    return ChainInstance(
        dict(parameters),
        reference - STATISTICAL_Z * stderr,
        sampled,
        reference + STATISTICAL_Z * stderr,
        verdict,
        float(z),
    )


def _all_exact(*results) -> bool:
    return all(result.bound == Bound.EXACT for result in results)


def _maximal_entropy(mu: InvariantMeasure) -> bool:
    if mu.kind == MeasureKind.PARRY:
        return True
    return mu.kind == MeasureKind.BERNOULLI and bool(np.allclose(mu.weights, mu.weights[0]))


class _SuiteRun:
    """Per-run caches shared by the suite jobs."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.top = max(config.n_ladder)
        self._lock = threading.Lock()
        self._systems: Dict[int, DynamicalSystem] = {}
        self._references: Dict[tuple, FinitePointSet] = {}
        self._covers: Dict[tuple, Tuple[FinitePointSet, Cover]] = {}

    def system(self, position: int, instance: SuiteInstance) -> DynamicalSystem:
        with self._lock:
            if position not in self._systems:
                self._systems[position] = SystemService.make_system(instance.system)
            return self._systems[position]

    def reference(self, position: int, system: DynamicalSystem, window: int) -> FinitePointSet:
        """Full enumeration on shift spaces and circle grids, a seeded sample on the interval shift."""
        window = max(window, 0)
        key = (position, window)
        with self._lock:
            if key not in self._references:
                if system.kind == SystemKind.INTERVAL_SHIFT:
                    points = SystemService.sample_points(
                        system,
                        SAMPLED_REFERENCE_POINTS,
                        child_seed(self.config.seed, position, _SEED_SAMPLE),
                        window,
                        horizon=self.top - 1,
                    )
                else:
                    points = SystemService.enumerate_points(system, window, horizon=self.top - 1)
                self._references[key] = points
            return self._references[key]

    def cover(self, position: int, system: DynamicalSystem, eps: float) -> Tuple[FinitePointSet, Cover]:
        """Spanning cover at eps on a reference set with one coordinate of margin past its cells."""
        K = self.reference(position, system, dyadic_radius(eps / 2.0, strict=True) + 1)
        key = (position, eps)
        with self._lock:
            if key not in self._covers:
                self._covers[key] = (K, CoverService.spanning_cover(system, K, eps))
            return self._covers[key]

    def measures(self, position: int, instance: SuiteInstance, system: DynamicalSystem) -> List[InvariantMeasure]:
        built = []
        for index, spec in enumerate(instance.measures):
            try:
                built.append(
                    MeasureService.make_measure(spec, system, child_seed(self.config.seed, position, _SEED_MEASURE, index))
                )
            except IncompatibleSpec as error:
                logger.warning("Skipping measure %s on %s: %s", spec.kind, instance.label, error)
        return built


class VerifyService:
    """Inequality suite and the interval-shift example reproduction."""

    # -- topological counts --------------------------------------------

    @staticmethod
    def _count_chains(run: _SuiteRun, position: int, instance: SuiteInstance) -> List[Tuple[str, ChainInstance]]:
        config = run.config
        system = run.system(position, instance)
        out = []
        for eps in config.eps_ladder:
            K = run.reference(position, system, dyadic_radius(eps / 2.0, strict=True) + 1)
            base = {"instance": instance.label, "eps": eps}
            ladders = {"spanning": [], "separated": [], "half_spanning": []}
            tags = []
            for n in config.n_ladder:
                spanning = RateService.count(system, K, n, eps, "spanning")
                separated = RateService.count(system, K, n, eps, "separated")
                half = RateService.count(system, K, n, eps / 2.0, "spanning")
                exact = _all_exact(spanning, separated, half)
                out.append(("bowen_chain", _chain_instance(
                    {**base, "n": n}, spanning.value, separated.value, half.value, exact
                )))
                ladders["spanning"].append((n, spanning.value))
                ladders["separated"].append((n, separated.value))
                ladders["half_spanning"].append((n, half.value))
                tags.append(exact)

                greedy_separated = RateService.count(system, K, n, eps, "separated", CountMode.GREEDY)
                greedy_spanning = RateService.count(system, K, n, eps, "spanning", CountMode.GREEDY)
                out.append(("greedy_sandwich", _chain_instance(
                    {**base, "n": n, "count": "separated"},
                    greedy_separated.value, separated.value, separated.value, separated.is_exact,
                )))
                out.append(("greedy_sandwich", _chain_instance(
                    {**base, "n": n, "count": "spanning"},
                    spanning.value, greedy_spanning.value, greedy_spanning.value, spanning.is_exact,
                )))
            for mode in (RateMode.UPPER, RateMode.LOWER):
                rates = [
                    RateService.rate_from_counts(ladders[key], mode=mode, statistic=RateStatistic.AVERAGE).value
                    for key in ("spanning", "separated", "half_spanning")
                ]
                out.append(("rate_chain", _chain_instance({**base, "mode": mode}, *rates, exact=all(tags))))
        return out

    # -- covers and measure-weighted counts ----------------------------

    @staticmethod
    def _cover_chains(run: _SuiteRun, position: int, instance: SuiteInstance) -> List[Tuple[str, ChainInstance]]:
        config = run.config
        system = run.system(position, instance)
        if not system.symbolic:
            logger.info("Cover chains skipped on %s: no cylinder structure", instance.label)
            return []
        measures = [mu for mu in run.measures(position, instance, system) if mu.cylinder_exact]
        out = []
        for eps in config.eps_ladder:
            K, cover = run.cover(position, system, eps)
            if not cover.diam or not cover.leb_lower:
                logger.warning("Cover at eps=%s has diam %s, leb %s on this sample; skipped", eps, cover.diam, cover.leb_lower)
                continue
            base = {"instance": instance.label, "eps": eps, "diam": cover.diam, "leb": cover.leb_lower}
            joins = {n: CoverService.join_cover(system, cover, K, n) for n in config.n_ladder}
            ladders = {"lower": [], "cover": [], "upper": []}
            tags = []
            for n in config.n_ladder:
                subcover = CoverService.minimal_subcover_count(joins[n], K)
                lower = RateService.count(system, K, n, 3.0 * cover.diam, "separated")
                upper = RateService.count(system, K, n, cover.leb_lower, "separated")
                exact = _all_exact(lower, subcover, upper)
                out.append(("cover_entropy_chain", _chain_instance(
                    {**base, "n": n, "level": "count"}, lower.value, subcover.value, upper.value, exact
                )))
                ladders["lower"].append((n, lower.value))
                ladders["cover"].append((n, subcover.value))
                ladders["upper"].append((n, upper.value))
                tags.append(exact)
            rates = [
                RateService.rate_from_counts(ladders[key], statistic=RateStatistic.AVERAGE).value
                for key in ("lower", "cover", "upper")
            ]
            out.append(("cover_entropy_chain", _chain_instance({**base, "level": "rate"}, *rates, exact=all(tags))))

            eps_diameter = 2.0 * cover.diam
            for mu in measures:
                out.extend(VerifyService._measure_cover_chains(config, system, mu, K, cover, joins, eps, eps_diameter, base))
        return out

    @staticmethod
    def _measure_cover_chains(config, system, mu, K, cover, joins, eps, eps_diameter, base):
        out = []
        base = {**base, "measure": mu.kind}
        for delta in config.deltas:
            katok, quarter, shapira = [], [], []
            tags = []
            for n in config.n_ladder:
                params = {**base, "n": n, "delta": delta}
                ball = MeasureService.katok_count(mu, system, n, eps, delta)
                left = MeasureService.katok_count(mu, system, n, eps_diameter, delta, variant="diameter", strict=False)
                middle = CoverService.shapira_count(joins[n], K, mu, delta)
                right = MeasureService.katok_count(mu, system, n, cover.leb_lower, delta)
                out.append(("shapira_katok_count_chain", _chain_instance(
                    {**params, "eps_diameter": eps_diameter}, left.value, middle.value, right.value,
                    _all_exact(left, middle, right),
                )))

                greedy_shapira = CoverService.shapira_count(joins[n], K, mu, delta, CountMode.GREEDY)
                greedy_katok = MeasureService.katok_count(mu, system, n, eps, delta, mode=CountMode.GREEDY)
                out.append(("greedy_sandwich", _chain_instance(
                    {**params, "count": "shapira"}, middle.value, greedy_shapira.value, greedy_shapira.value,
                    middle.is_exact,
                )))
                out.append(("greedy_sandwich", _chain_instance(
                    {**params, "count": "katok"}, ball.value, greedy_katok.value, greedy_katok.value, ball.is_exact,
                )))

                outer = MeasureService.katok_count(mu, system, n, eps / 4.0, delta)
                katok.append((n, ball.value))
                shapira.append((n, middle.value))
                quarter.append((n, outer.value))
                tags.append(_all_exact(ball, middle, outer))
            for mode, chain in ((RateMode.UPPER, "katok_shapira_rate_chain"), (RateMode.LOWER, "lower_katok_shapira_rate_chain")):
                rates = [
                    RateService.rate_from_counts(ladder, mode=mode, statistic=RateStatistic.AVERAGE).value
                    for ladder in (katok, shapira, quarter)
                ]
                out.append((chain, _chain_instance({**base, "delta": delta, "mode": mode}, *rates, exact=all(tags))))
        return out

    # -- Katok counts against diameter counts ------------------------------

    @staticmethod
    def _count_family(result):
        """Cylinder window or ball radius a Katok count was taken over."""
        return result.diagnostics.get("window", result.diagnostics.get("radius"))

    @staticmethod
    def _katok_diameter_chains(run: _SuiteRun, position: int, instance: SuiteInstance) -> List[Tuple[str, ChainInstance]]:
        """
        N-tilde(n, 2 eps) <= N(n, eps) <= N-tilde(n, eps), each count computed on its own.

        same_family flags a side whose two counts run over one family of
        sets (cylinders on one window, or balls of one radius on shared
        atoms); such a side holds by construction.
        """
        config = run.config
        system = run.system(position, instance)
        out = []
        for index, mu in enumerate(run.measures(position, instance, system)):
            if not mu.cylinder_exact and config.budgets.monte_carlo <= 0:
                logger.info("Katok diameter chain skipped for %s on %s: zero draw budget", mu.kind, instance.label)
                continue
            mode = CountMode.EXACT if mu.cylinder_exact else CountMode.GREEDY
            for eps in config.eps_ladder:
                for delta in config.deltas:
                    for n in config.n_ladder:
                        seed = child_seed(config.seed, position, _SEED_KATOK, index, n)
                        try:
                            left, middle, right = (
                                MeasureService.katok_count(mu, system, n, radius, delta, variant=variant, mode=mode, seed=seed)
                                for radius, variant in ((2.0 * eps, "diameter"), (eps, "ball"), (eps, "diameter"))
                            )
                        except DynamicsError as error:
                            logger.warning("Katok diameter chain at eps=%s, n=%s skipped: %s", eps, n, error)
                            continue
                        families = [VerifyService._count_family(result) for result in (left, middle, right)]
                        out.append(("katok_diameter_chain", _chain_instance(
                            {
                                "instance": instance.label, "measure": mu.kind, "eps": eps, "n": n, "delta": delta,
                                "families": families,
                                "same_family": [families[0] == families[1], families[1] == families[2]],
                            },
                            left.value, middle.value, right.value, _all_exact(left, middle, right),
                        )))
        return out

    # -- local entropies ---------------------------------------------------

    @staticmethod
    def _local_chains(run: _SuiteRun, position: int, instance: SuiteInstance) -> List[Tuple[str, ChainInstance]]:
        config = run.config
        system = run.system(position, instance)
        if not system.symbolic:
            return VerifyService._sampled_local_chains(run, position, instance, system)
        points = config.budgets.points
        out = []
        for index, mu in enumerate(run.measures(position, instance, system)):
            if not mu.cylinder_exact:
                continue
            for eps in config.eps_ladder:
                K, cover = run.cover(position, system, eps)
                if not cover.diam or not cover.leb_lower:
                    continue
                eps_diameter = 2.0 * cover.diam
                margin = max(dyadic_radius(cover.leb_lower, strict=True), dyadic_radius(eps, strict=True), 0) + 1
                centers = mu.sample_points(
                    points, -margin, margin + run.top - 1, child_seed(config.seed, position, _SEED_CENTERS, index)
                )
                base = {"instance": instance.label, "measure": mu.kind, "eps": eps}
                out.extend(VerifyService._cover_local_chains(config, system, mu, cover, centers, eps_diameter, base))

                lower_bk = RateService.brin_katok_entropy(
                    mu, system, eps, points, config.n_ladder, RateMode.LOWER, RateStatistic.AVERAGE, centers=centers
                )
                for delta in config.deltas:
                    katok = RateService.katok_entropy(
                        mu, system, eps / 4.0, delta, config.n_ladder, RateMode.UPPER, RateStatistic.AVERAGE
                    )
                    out.append(("katok_lower_brin_katok_chain", _chain_instance(
                        {**base, "delta": delta}, lower_bk.center, katok.value, katok.value,
                        exact=katok.bound == Bound.EXACT and _maximal_entropy(mu),
                    )))
                out.extend(VerifyService._symbolic_open_problems(config, system, mu, K, cover, centers, eps, base))
        return out

    @staticmethod
    def _cover_local_chains(config, system, mu, cover, centers, eps_diameter, base):
        out = []
        points = len(centers)
        for mode, chain in ((RateMode.UPPER, "brin_katok_cover_chain"), (RateMode.LOWER, "lower_brin_katok_cover_chain")):
            estimates = [
                RateService.brin_katok_entropy(
                    mu, system, eps_diameter, points, config.n_ladder, mode, RateStatistic.AVERAGE, centers=centers
                ),
                RateService.cover_brin_katok_entropy(
                    mu, system, cover, points, config.n_ladder, mode, RateStatistic.AVERAGE, centers=centers
                ),
                RateService.brin_katok_entropy(
                    mu, system, cover.leb_lower, points, config.n_ladder, mode, RateStatistic.AVERAGE, centers=centers
                ),
            ]
            per_point = [dict(estimate.per_point) for estimate in estimates]
            for number, x in enumerate(centers):
                rates = [table.get(x) for table in per_point]
                if any(rate is None for rate in rates):
                    continue
                out.append((chain, _chain_instance(
                    {**base, "mode": mode, "point": number, "eps_diameter": eps_diameter},
                    *(rate.value for rate in rates),
                    exact=all(rate.bound == Bound.EXACT for rate in rates),
                )))
        return out

    @staticmethod
    def _symbolic_open_problems(config, system, mu, K, cover, centers, eps, base):
        """Entropy sandwiches against S(X, eps) and the lower Katok factor sweep."""
        if eps >= 1.0:
            return []
        out = []
        scale = math.log(1.0 / eps)
        delta = config.deltas[0]
        points = len(centers)
        separated = RateService.growth_rate(system, K, eps, config.n_ladder, "separated", statistic=RateStatistic.INCREMENT)
        reference = separated.value / scale
        candidates = {
            "katok": RateService.katok_entropy(mu, system, eps, delta, config.n_ladder, statistic=RateStatistic.INCREMENT).value,
            "lower_katok": RateService.katok_entropy(
                mu, system, eps, delta, config.n_ladder, RateMode.LOWER, RateStatistic.INCREMENT
            ).value,
            "shapira": RateService.shapira_entropy(
                mu, system, cover, K, delta, config.n_ladder, statistic=RateStatistic.INCREMENT
            ).value,
            "brin_katok": RateService.brin_katok_entropy(
                mu, system, eps, points, config.n_ladder, statistic=RateStatistic.INCREMENT, centers=centers
            ).center,
        }
        for quantity, value in candidates.items():
            out.append(("theorem_sandwich", _chain_instance(
                {**base, "quantity": quantity, "delta": delta}, value / scale, reference, reference, exact=False
            )))

        lower_bk = RateService.brin_katok_entropy(
            mu, system, eps, points, config.n_ladder, RateMode.LOWER, RateStatistic.INCREMENT, centers=centers
        ).center
        sweep = []
        for factor in LOWER_KATOK_FACTORS:
            rate = RateService.katok_entropy(
                mu, system, factor * eps, delta, config.n_ladder, RateMode.LOWER, RateStatistic.INCREMENT
            ).value
            sweep.append((factor, rate))
        smallest = next((factor for factor, rate in sweep if rate <= lower_bk + EXACT_SLACK), None)
        for factor, rate in sweep:
            out.append(("lower_katok_open_problem", _chain_instance(
                {**base, "delta": delta, "factor": factor, "smallest_factor": smallest},
                rate, lower_bk, lower_bk, exact=False,
            )))
        return out

    @staticmethod
    def _sampled_local_chains(run: _SuiteRun, position: int, instance: SuiteInstance, system) -> List[Tuple[str, ChainInstance]]:
        """Brin-Katok rates over S(K, eps) on systems without cylinder masses (report only)."""
        config = run.config
        out = []
        for index, mu in enumerate(run.measures(position, instance, system)):
            for eps in config.eps_ladder:
                if eps >= 1.0:
                    continue
                K = run.reference(position, system, lattice_margin(eps))
                try:
                    separated = RateService.growth_rate(
                        system, K, eps, config.n_ladder, "separated", statistic=RateStatistic.INCREMENT
                    )
                    brin_katok = RateService.brin_katok_entropy(
                        mu, system, eps, config.budgets.points, config.n_ladder,
                        statistic=RateStatistic.INCREMENT,
                        budget=config.budgets.monte_carlo,
                        seed=child_seed(config.seed, position, _SEED_CENTERS, index),
                    )
                except DynamicsError as error:
                    logger.warning("Brin-Katok estimate at eps=%s on %s skipped: %s", eps, instance.label, error)
                    continue
                scale = math.log(1.0 / eps)
                out.append(("theorem_sandwich", _chain_instance(
                    {"instance": instance.label, "measure": mu.kind, "eps": eps, "quantity": "brin_katok"},
                    brin_katok.center / scale, separated.value / scale, separated.value / scale, exact=False,
                )))
        return out

    # -- local entropy function ----------------------------------------------

    @staticmethod
    def _local_entropy_chains(run: _SuiteRun, position: int, instance: SuiteInstance) -> List[Tuple[str, ChainInstance]]:
        config = run.config
        system = run.system(position, instance)
        if not system.symbolic:
            return []
        out = []
        for index, eps in enumerate(config.eps_ladder):
            K = run.reference(position, system, dyadic_radius(eps, strict=False) + 1)
            separated = RateService.growth_rate(system, K, eps, config.n_ladder, "separated", statistic=RateStatistic.INCREMENT)
            spanning = RateService.growth_rate(system, K, eps, config.n_ladder, "spanning", statistic=RateStatistic.INCREMENT)
            rng = np.random.default_rng(child_seed(config.seed, position, _SEED_PICKS, index))
            picks = np.sort(rng.choice(len(K), size=min(config.budgets.points, len(K)), replace=False))
            local, tilde = [], []
            for pick in picks:
                x = K.point(int(pick))
                local.append(RateService.local_entropy_at(
                    system, K, x, eps, config.radius_ladder, config.n_ladder, "separated",
                    statistic=RateStatistic.INCREMENT,
                ))
                tilde.append(RateService.local_entropy_at(
                    system, K, x, eps, config.radius_ladder, config.n_ladder, "spanning",
                    statistic=RateStatistic.INCREMENT,
                ))
            sup_local = max(rate.value for rate in local)
            sup_tilde = max(rate.value for rate in tilde)
            exact = system.kind == SystemKind.FULL_SHIFT and all(
                rate.bound == Bound.EXACT for rate in [separated, spanning, *local, *tilde]
            )
            base = {"instance": instance.label, "eps": eps, "points": len(picks)}
            out.append(("local_entropy_chain", _chain_instance(
                {**base, "check": "sup_local_equals_separated"},
                separated.value, sup_local, separated.value, exact, tolerance=LOCAL_TOLERANCE,
            )))
            out.append(("local_entropy_chain", _chain_instance(
                {**base, "check": "spanning_below_sup_local"},
                spanning.value, sup_tilde, sup_tilde, exact,
            )))
        return out

    # -- partition identity ----------------------------------------------------

    @staticmethod
    def _partition_chains(run: _SuiteRun, position: int, instance: SuiteInstance) -> List[Tuple[str, ChainInstance]]:
        config = run.config
        system = run.system(position, instance)
        if not system.symbolic:
            return []
        K = run.reference(position, system, 0)
        partition = CoverService.cylinder_cover(system, 1)
        out = []
        for mu in run.measures(position, instance, system):
            if not mu.cylinder_exact or mu.kind == MeasureKind.EMPIRICAL:
                continue
            entropy = mu.entropy()
            checked = mu.kind == MeasureKind.BERNOULLI and _maximal_entropy(mu)
            for delta in config.deltas:
                rate = RateService.shapira_entropy(
                    mu, system, partition, K, delta, config.n_ladder, statistic=RateStatistic.INCREMENT
                )
                out.append(("partition_identity", _chain_instance(
                    {"instance": instance.label, "measure": mu.kind, "delta": delta, "generation": 1},
                    entropy, rate.value, entropy,
                    exact=checked and rate.bound == Bound.EXACT,
                    tolerance=IDENTITY_TOLERANCE,
                )))
        return out

    # -- statistical checks ----------------------------------------------------

    @staticmethod
    def _invariance_events(system: DynamicalSystem) -> List[Tuple[int, list]]:
        if system.symbolic:
            words = SystemService.enumerate_points(system, 0, horizon=1)
            return [(0, row.tolist()) for row in words.values]
        if system.kind == SystemKind.CIRCLE_DOUBLING:
            return [(0, [(0.1, 0.35)]), (0, [(0.5, 0.9)])]
        return [(0, [(0.2, 0.6), (0.1, 0.5)]), (-1, [(0.0, 0.3)])]

    @staticmethod
    def _statistical_chains(run: _SuiteRun, position: int, instance: SuiteInstance) -> List[Tuple[str, ChainInstance]]:
        config = run.config
        system = run.system(position, instance)
        draws = config.budgets.monte_carlo
        if draws <= 0:
            logger.warning("Statistical checks on %s skipped: zero draw budget", instance.label)
            return []
        out = []
        for index, mu in enumerate(run.measures(position, instance, system)):
            base = {"instance": instance.label, "measure": mu.kind}
            for number, (event_lo, event) in enumerate(VerifyService._invariance_events(system)):
                seed = child_seed(config.seed, position, _SEED_STATISTICAL, index, number)
                p, q, z = MeasureService.invariance_check(mu, event_lo, event, draws, seed)
                stderr = max(math.sqrt((p * (1 - p) + q * (1 - q)) / draws), 1.0 / draws)
                out.append(("invariance", _statistical_instance(
                    {**base, "event": number, "event_lo": event_lo}, p, q, stderr
                )))
            out.extend(VerifyService._mass_checks(config, position, index, system, mu, base, draws))
        return out

    @staticmethod
    def _mass_checks(config, position, index, system, mu, base, draws):
        out = []
        for eps_index, eps in enumerate(config.eps_ladder):
            if eps >= system.diameter:
                continue
            if system.kind == SystemKind.CIRCLE_DOUBLING and (mu.kind != MeasureKind.PRODUCT_LEBESGUE or eps > 0.25):
                continue
            if system.kind == SystemKind.INTERVAL_SHIFT and mu.kind != MeasureKind.PRODUCT_LEBESGUE:
                continue
            if system.symbolic:
                margin = max(dyadic_radius(eps, strict=True), 0) + 1
            elif system.kind == SystemKind.INTERVAL_SHIFT:
                margin = lattice_margin(eps)
            else:
                margin = 0
            for n in config.n_ladder[:2]:
                seed = child_seed(config.seed, position, _SEED_STATISTICAL, index, 100 + eps_index, n)
                if system.kind == SystemKind.CIRCLE_DOUBLING:
                    centers = mu.sample_points(MASS_CHECK_POINTS, 0, 0, child_seed(seed, 0))
                else:
                    centers = mu.sample_points(MASS_CHECK_POINTS, -margin, margin + n - 1, child_seed(seed, 0))
                for number, x in enumerate(centers):
                    params = {**base, "eps": eps, "n": n, "point": number}
                    if system.kind == SystemKind.INTERVAL_SHIFT:
                        inner, inner_lo, _ = MeasureService.interval_boxes(x, n, eps)
                        reference = mu.box_mass(inner, inner_lo)
                        samples = mu.sample(draws, inner_lo, inner_lo + len(inner) - 1, child_seed(seed, 1, number))
                        lows = np.array([a for a, _ in inner])
                        highs = np.array([b for _, b in inner])
                        sampled = float(np.all((samples >= lows) & (samples <= highs), axis=1).mean())
                        params["event"] = "inner_box"
                    else:
                        reference = MeasureService.ball_mass(mu, system, x, n, eps).value
                        sampled = MeasureService.monte_carlo_ball_mass(
                            mu, system, x, n, eps, draws, child_seed(seed, 1, number)
                        ).value
                        params["event"] = "ball"
                    stderr = max(math.sqrt(reference * (1.0 - reference) / draws), 1.0 / draws)
                    out.append(("mass_vs_monte_carlo", _statistical_instance(params, reference, sampled, stderr)))
        return out

    # -- entry points ----------------------------------------------------------

    @classmethod
    def _families(cls):
        return (
            ("counts", cls._count_chains),
            ("covers", cls._cover_chains),
            ("katok_diameter", cls._katok_diameter_chains),
            ("local", cls._local_chains),
            ("local_entropy", cls._local_entropy_chains),
            ("partition", cls._partition_chains),
            ("statistical", cls._statistical_chains),
        )

    @staticmethod
    def _run_job(job, run: _SuiteRun, position: int, instance: SuiteInstance, family: str):
        try:
            with active_budgets(run.config.budgets):
                return job(run, position, instance)
        except BudgetExceeded as error:
            logger.warning("Suite job %s on %s over budget: %s", family, instance.label, error)
            return [("job_errors", ChainInstance(
                {"instance": instance.label, "family": family, "error": str(error)}, math.nan, math.nan, math.nan,
                Verdict.PROBE,
            ))]
        except Exception as error:
            logger.exception("Suite job %s on %s failed", family, instance.label)
            return [("job_errors", ChainInstance(
                {"instance": instance.label, "family": family, "error": str(error)}, math.nan, math.nan, math.nan,
                Verdict.FAIL,
            ))]

    @classmethod
    def run_inequality_suite(cls, config: ExperimentConfig, jobs: int = 1) -> List[ChainReport]:
        """
        Evaluate every chain on every compatible (system, measure) pair of the config.

        Jobs are (instance, family) pairs run on a thread pool; reports are
        merged by chain order, then instance and family order, so the result
        does not depend on scheduling.
        """
        run = _SuiteRun(config)
        work = [
            (position, instance, family, job)
            for position, instance in enumerate(config.suite)
            for family, job in cls._families()
        ]
        logger.info("Inequality suite: %s jobs over %s instances", len(work), len(config.suite))
        with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as executor:
            futures = [
                executor.submit(cls._run_job, job, run, position, instance, family)
                for position, instance, family, job in work
            ]
            results = [future.result() for future in futures]
        reports = []
        for chain_id in CHAIN_ORDER:
            report = ChainReport(chain_id)
            for result in results:
                report.instances.extend(instance for cid, instance in result if cid == chain_id)
            if report.instances:
                reports.append(report)
                logger.info("%s: %s over %s instances", chain_id, report.verdict, len(report.instances))
        return reports

    @classmethod
    def reproduce_example(cls, config: ExperimentConfig, eps_ladder: Optional[Sequence[float]] = None) -> ExampleReport:
        """
        Brin-Katok rates of product Lebesgue on the interval shift against
        log(1/(4 eps)) and log(3/eps), with separated rates and both slopes.

        Raises:
            IncompatibleSpec: the configured system is not the interval shift
            WindowError: the window is below l = ceil(log2(4/eps)) at the smallest eps
        """
        spec = config.system
        if spec.kind != SystemKind.INTERVAL_SHIFT:
            raise IncompatibleSpec(f"the example runs on interval_shift, config has {spec.kind}")
        ladder = sorted(eps_ladder or config.eps_ladder, reverse=True)
        margin = lattice_margin(ladder[-1])
        if spec.window < margin:
            raise WindowError(
                f"window {spec.window} is too small: eps={ladder[-1]:g} needs "
                f"l = ceil(log2(4/eps)) = {margin}, set window >= {margin}",
                required=(-margin, margin),
            )
        system = SystemService.make_system(spec)
        lebesgue = next(
            (m for m in config.measures if m.kind == MeasureKind.PRODUCT_LEBESGUE),
            MeasureSpec(kind=MeasureKind.PRODUCT_LEBESGUE),
        )
        mu = MeasureService.make_measure(lebesgue, system, config.seed)
        K = SystemService.enumerate_points(system, spec.window, horizon=max(config.n_ladder) - 1, lazy=True)
        mdim = RateService.mdim_estimate(system, K, ladder, config.n_ladder, statistic=RateStatistic.INCREMENT)
        separated = dict(mdim.per_eps)

        rows = []
        for index, eps in enumerate(ladder):
            estimate = RateService.brin_katok_entropy(
                mu, system, eps, config.budgets.points, config.n_ladder,
                statistic=RateStatistic.INCREMENT, seed=child_seed(config.seed, index),
            )
            lower, upper = math.log(1.0 / (4.0 * eps)), math.log(3.0 / eps)
            inside = lower - SANDWICH_SLACK <= estimate.center <= upper + SANDWICH_SLACK
            rate = separated.get(eps)
            rows.append(ExampleRow(
                epsilon=eps,
                brin_katok=estimate.center,
                interval=estimate.interval,
                lower=lower,
                upper=upper,
                separated_rate=rate.value if rate else None,
                normalized=rate.value / math.log(1.0 / eps) if rate and eps < 1.0 else None,
                verdict=Verdict.EXACT_PASS if inside else Verdict.FAIL,
            ))
            if not inside:
                logger.warning("Brin-Katok rate %s at eps=%s leaves [%s, %s]", estimate.center, eps, lower, upper)
        slope = None
        if len(rows) >= 2:
            slope = float(stats.linregress([math.log(1.0 / row.epsilon) for row in rows], [row.brin_katok for row in rows]).slope)
        return ExampleReport(
            rows=tuple(rows),
            brin_katok_slope=slope,
            separated_slope=mdim.slope,
            margin=margin,
            dropped=mdim.dropped,
        )
