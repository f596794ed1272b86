"""Run the tasks of an experiment config"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np
from django.conf import settings

from dynamics.exceptions import BudgetExceeded
from dynamics.models import (
    CountMode,
    ExperimentConfig,
    FinitePointSet,
    RateEstimate,
    RateMode,
    SystemKind,
    TaskKind,
    TaskResult,
    TaskStatus,
)
from .budget_context import active_budgets
from .cover_service import CoverService
from .measure_service import MeasureService, child_seed
from .rate_service import RateService
from .system_service import DynamicalSystem, SystemService, dyadic_radius
from .verify_service import VerifyService

logger = logging.getLogger(__name__)

SAMPLED_POINTS_PER_CENTER = 4
MODES = (RateMode.UPPER, RateMode.LOWER)


def _row(task, **values) -> dict:
    row = {"task": str(task)}
    row.update(values)
    return row


def _rate_summary(task, rate: RateEstimate, **context) -> dict:
    return {
        "task": str(task),
        **context,
        "rate": rate.value,
        "mode": rate.mode,
        "statistic": rate.statistic,
        "bound": rate.bound,
        "n_range": list(rate.n_range),
        "counts": [list(pair) for pair in rate.counts],
        "average_stat": rate.average_stat,
        "increment_stat": rate.increment_stat,
        "slope_fit": {
            "slope": rate.slope_fit.slope,
            "intercept": rate.slope_fit.intercept,
            "residual": rate.slope_fit.residual,
        },
        "interval": list(rate.interval) if rate.interval else None,
        "diagnostics": rate.diagnostics,
    }


class ExperimentJobService:
    """Dispatch configured tasks on a thread pool and collect their rows."""

    @classmethod
    def run(cls, config: ExperimentConfig, jobs: Optional[int] = None) -> List[TaskResult]:
        """
        Run every task of the config; results come back in config task order.

        A task over budget is DEGRADED and keeps the rows it produced; any
        other error marks it FAILED.
        """
        jobs = max(1, int(jobs or settings.DYNAMICS_MAX_JOBS))
        results = [TaskResult(task=task) for task in config.tasks]
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            futures = [
                executor.submit(cls._process_task, config, result, child_seed(config.seed, index), jobs)
                for index, result in enumerate(results)
            ]
            for future in futures:
                future.result()
        return results

    @classmethod
    def _process_task(cls, config: ExperimentConfig, result: TaskResult, seed: int, jobs: int):
        result.status = TaskStatus.PROCESSING
        handler = getattr(cls, f"_run_{result.task}")
        logger.info("Task %s started (seed %s)", result.task, seed)
        try:
            with active_budgets(config.budgets):
                handler(config, result, seed, jobs)
            result.status = TaskStatus.COMPLETED
        except BudgetExceeded as exc:
            logger.warning("Task %s degraded: %s", result.task, exc)
            result.status = TaskStatus.DEGRADED
            result.error = str(exc)
        except Exception as exc:
            logger.exception("Task %s failed", result.task)
            result.status = TaskStatus.FAILED
            result.error = str(exc)
        logger.info("Task %s %s with %s rows", result.task, result.status, len(result.rows))

    # -- reference sets ---------------------------------------------------

    @staticmethod
    def _count_reference(system: DynamicalSystem, config: ExperimentConfig, eps_values) -> FinitePointSet:
        """Stand-in for X behind separated and spanning counts; shift spaces widen to the finest eps."""
        window = config.system.window
        if system.symbolic:
            window = max(window, max(dyadic_radius(eps / 2.0, strict=True) + 1 for eps in eps_values))
        return SystemService.enumerate_points(system, window, horizon=max(config.n_ladder) - 1, lazy=True)

    @staticmethod
    def _sampled_reference(system: DynamicalSystem, config: ExperimentConfig, window: int, seed: int) -> FinitePointSet:
        """Materialized stand-in: full enumeration on shift spaces, a grid sample otherwise."""
        top = max(config.n_ladder)
        if system.symbolic or system.kind == SystemKind.CIRCLE_DOUBLING:
            return SystemService.enumerate_points(system, window, horizon=top - 1)
        count = SAMPLED_POINTS_PER_CENTER * config.budgets.points
        return SystemService.sample_points(system, count, seed, window, horizon=top - 1)

    @staticmethod
    def _measures(config: ExperimentConfig, system: DynamicalSystem, seed: int):
        return [
            MeasureService.make_measure(spec, system, child_seed(seed, index))
            for index, spec in enumerate(config.measures)
        ]

    # -- tasks ------------------------------------------------------------

    @classmethod
    def _run_growth(cls, config, result, seed, jobs):
        system = SystemService.make_system(config.system)
        for eps in config.eps_ladder:
            K = cls._count_reference(system, config, [eps])
            for kind in ("separated", "spanning"):
                counts = [RateService.count(system, K, n, eps, kind) for n in config.n_ladder]
                rates = {mode: RateService.rate_from_results(counts, mode, config.rate_statistic) for mode in MODES}
                for count in counts:
                    result.rows.append(_row(
                        TaskKind.GROWTH, system=system.kind, quantity=kind, eps=eps, n=count.n,
                        count=count.value, bound=count.bound, method=count.method,
                        rate=rates[RateMode.UPPER].value, mode=RateMode.UPPER, statistic=config.rate_statistic,
                    ))
                for rate in rates.values():
                    result.summary.append(_rate_summary(TaskKind.GROWTH, rate, system=system.kind, quantity=kind, eps=eps))

    @classmethod
    def _run_mdim(cls, config, result, seed, jobs):
        system = SystemService.make_system(config.system)
        K = cls._count_reference(system, config, config.eps_ladder)
        for mode in MODES:
            estimate = RateService.mdim_estimate(
                system, K, config.eps_ladder, config.n_ladder, mode, config.rate_statistic
            )
            for eps, rate in estimate.per_eps:
                result.rows.append(_row(
                    TaskKind.MDIM, system=system.kind, quantity="separated", eps=eps,
                    rate=rate.value, bound=rate.bound, mode=mode, statistic=rate.statistic,
                ))
                result.summary.append(_rate_summary(TaskKind.MDIM, rate, system=system.kind, eps=eps))
            result.summary.append({
                "task": TaskKind.MDIM,
                "system": system.kind,
                "mode": mode,
                "slope": estimate.slope,
                "intercept": estimate.intercept,
                "eps": [eps for eps, _ in estimate.per_eps],
                "dropped": list(estimate.dropped),
            })

    @classmethod
    def _run_katok(cls, config, result, seed, jobs):
        system = SystemService.make_system(config.system)
        for mu in cls._measures(config, system, seed):
            count_mode = CountMode.EXACT if mu.cylinder_exact else CountMode.GREEDY
            for eps in config.eps_ladder:
                for delta in config.deltas:
                    counts = [
                        MeasureService.katok_count(
                            mu, system, n, eps, delta, mode=count_mode,
                            budget=config.budgets.monte_carlo, seed=child_seed(mu.seed, n),
                        )
                        for n in config.n_ladder
                    ]
                    rates = {
                        mode: RateService.rate_from_katok_counts(counts, mode, config.rate_statistic)
                        for mode in MODES
                    }
                    for count in counts:
                        result.rows.append(_row(
                            TaskKind.KATOK, system=system.kind, measure=mu.kind, quantity="katok",
                            eps=eps, n=count.n, delta=delta, count=count.value, bound=count.bound,
                            method=count.method, rate=rates[RateMode.UPPER].value, mode=RateMode.UPPER,
                            statistic=config.rate_statistic, stderr=count.diagnostics.get("stderr"),
                        ))
                    for rate in rates.values():
                        result.summary.append(_rate_summary(
                            TaskKind.KATOK, rate, system=system.kind, measure=mu.kind, eps=eps, delta=delta
                        ))

    @classmethod
    def _run_brin_katok(cls, config, result, seed, jobs):
        system = SystemService.make_system(config.system)
        for mu in cls._measures(config, system, seed):
            for eps in config.eps_ladder:
                for mode in MODES:
                    estimate = RateService.brin_katok_entropy(
                        mu, system, eps, config.budgets.points, config.n_ladder, mode, config.rate_statistic,
                        budget=config.budgets.monte_carlo,
                    )
                    for number, (x, rate) in enumerate(estimate.per_point):
                        result.rows.append(_row(
                            TaskKind.BRIN_KATOK, system=system.kind, measure=mu.kind, quantity="brin_katok",
                            eps=eps, point=number, bound=rate.bound, rate=rate.value, mode=mode,
                            statistic=rate.statistic, stderr=rate.diagnostics.get("stderr"),
                        ))
                    result.summary.append({
                        "task": TaskKind.BRIN_KATOK,
                        "system": system.kind,
                        "measure": mu.kind,
                        "eps": eps,
                        "mode": mode,
                        "center": estimate.center,
                        "spread": estimate.spread,
                        "flagged": estimate.flagged,
                        "interval": list(estimate.interval) if estimate.interval else None,
                        "points": [
                            {"lo": x.lo, "values": list(x.values), "rate": rate.value,
                             "interval": list(rate.interval) if rate.interval else None,
                             "counts": [list(pair) for pair in rate.counts],
                             "stderr": rate.diagnostics.get("stderr")}
                            for x, rate in estimate.per_point
                        ],
                    })

    @classmethod
    def _run_shapira(cls, config, result, seed, jobs):
        system = SystemService.make_system(config.system)
        measures = cls._measures(config, system, seed)
        for index, eps in enumerate(config.eps_ladder):
            window = max(config.system.window, dyadic_radius(eps / 2.0, strict=True) + 1)
            K = cls._sampled_reference(system, config, window, child_seed(seed, 100, index))
            cover = CoverService.spanning_cover(system, K, eps)
            joins = {n: CoverService.join_cover(system, cover, K, n) for n in config.n_ladder}
            subcovers = [CoverService.minimal_subcover_count(joins[n], K) for n in config.n_ladder]
            result.summary.append({
                "task": TaskKind.SHAPIRA,
                "system": system.kind,
                "eps": eps,
                "cover": cover.construction,
                "cells": len(cover.cells),
                "diam": cover.diam,
                "leb_lower": cover.leb_lower,
                "subcover_counts": [[c.n, c.value, c.bound] for c in subcovers],
            })
            for mu in measures:
                count_mode = CountMode.EXACT if mu.cylinder_exact else CountMode.GREEDY
                for delta in config.deltas:
                    counts = [
                        CoverService.shapira_count(
                            joins[n], K, mu, delta, count_mode, config.budgets.monte_carlo, child_seed(mu.seed, 6, n)
                        )
                        for n in config.n_ladder
                    ]
                    rates = {mode: RateService.rate_from_results(counts, mode, config.rate_statistic) for mode in MODES}
                    for count in counts:
                        result.rows.append(_row(
                            TaskKind.SHAPIRA, system=system.kind, measure=mu.kind, quantity="shapira",
                            eps=eps, n=count.n, delta=delta, count=count.value, bound=count.bound,
                            method=count.method, rate=rates[RateMode.UPPER].value, mode=RateMode.UPPER,
                            statistic=config.rate_statistic, stderr=count.diagnostics.get("stderr"),
                        ))
                    for rate in rates.values():
                        result.summary.append(_rate_summary(
                            TaskKind.SHAPIRA, rate, system=system.kind, measure=mu.kind, eps=eps, delta=delta,
                            mode_gap=abs(rates[RateMode.UPPER].value - rates[RateMode.LOWER].value),
                        ))

    @classmethod
    def _run_local_entropy(cls, config, result, seed, jobs):
        system = SystemService.make_system(config.system)
        for index, eps in enumerate(config.eps_ladder):
            if system.symbolic:
                window = max(config.system.window, dyadic_radius(eps, strict=False) + 1)
            else:
                window = config.system.window
            K = cls._sampled_reference(system, config, window, child_seed(seed, 200, index))
            separated = RateService.growth_rate(system, K, eps, config.n_ladder, "separated", statistic=config.rate_statistic)
            spanning = RateService.growth_rate(system, K, eps, config.n_ladder, "spanning", statistic=config.rate_statistic)
            rng = np.random.default_rng(child_seed(seed, 300, index))
            picks = np.sort(rng.choice(len(K), size=min(config.budgets.points, len(K)), replace=False))
            values = {"separated": [], "spanning": []}
            for number, pick in enumerate(picks):
                x = K.point(int(pick))
                for kind in ("separated", "spanning"):
                    rate = RateService.local_entropy_at(
                        system, K, x, eps, config.radius_ladder, config.n_ladder, kind,
                        statistic=config.rate_statistic,
                    )
                    values[kind].append(rate.value)
                    result.rows.append(_row(
                        TaskKind.LOCAL_ENTROPY, system=system.kind, quantity=f"local_{kind}", eps=eps,
                        point=number, bound=rate.bound, rate=rate.value, mode=rate.mode, statistic=rate.statistic,
                    ))
            result.summary.append({
                "task": TaskKind.LOCAL_ENTROPY,
                "system": system.kind,
                "eps": eps,
                "sup_local_separated": max(values["separated"]),
                "sup_local_spanning": max(values["spanning"]),
                "separated_rate": separated.value,
                "spanning_rate": spanning.value,
                "points": [int(p) for p in picks],
                "radius_ladder": list(config.radius_ladder),
            })

    @classmethod
    def _run_verify(cls, config, result, seed, jobs):
        result.chains = VerifyService.run_inequality_suite(config, jobs=jobs)
        for report in result.chains:
            for instance in report.instances:
                result.rows.append({
                    "task": TaskKind.VERIFY,
                    "chain_id": report.chain_id,
                    "parameters": instance.parameters,
                    "left": instance.left,
                    "middle": instance.middle,
                    "right": instance.right,
                    "verdict": instance.verdict,
                    "z": instance.z,
                })
            result.summary.append({
                "task": TaskKind.VERIFY,
                "chain_id": report.chain_id,
                "verdict": report.verdict,
                "instances": len(report.instances),
                "failures": report.failures,
            })

    @classmethod
    def _run_example(cls, config, result, seed, jobs):
        report = VerifyService.reproduce_example(config)
        result.example = report
        for row in report.rows:
            low, high = row.interval if row.interval else (None, None)
            result.rows.append({
                "task": TaskKind.EXAMPLE,
                "eps": row.epsilon,
                "brin_katok": row.brin_katok,
                "interval_low": low,
                "interval_high": high,
                "lower": row.lower,
                "upper": row.upper,
                "separated_rate": row.separated_rate,
                "normalized": row.normalized,
                "verdict": row.verdict,
            })
            result.summary.append({
                "task": TaskKind.EXAMPLE,
                "eps": row.epsilon,
                "brin_katok": row.brin_katok,
                "interval": [low, high],
                "lower": row.lower,
                "upper": row.upper,
                "separated_rate": row.separated_rate,
                "normalized": row.normalized,
                "verdict": row.verdict,
                "log_inverse_eps": math.log(1.0 / row.epsilon),
            })
        result.summary.append({
            "task": TaskKind.EXAMPLE,
            "brin_katok_slope": report.brin_katok_slope,
            "separated_slope": report.separated_slope,
            "margin": report.margin,
            "dropped": list(report.dropped),
        })
