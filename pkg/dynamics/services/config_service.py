"""
Experiment configs: YAML in, validated ExperimentConfig out.

The file is composed once to keep node marks, so every validation error can
name the line it came from.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from django.conf import settings

from dynamics.exceptions import ConfigError, DynamicsError
from dynamics.models import (
    Budgets,
    ExperimentConfig,
    MeasureKind,
    MeasureSpec,
    RateStatistic,
    SuiteInstance,
    SystemKind,
    SystemSpec,
    TaskKind,
)
from .measure_service import MeasureService
from .system_service import SystemService

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {
    "seed", "out", "tasks", "system", "measures", "eps_ladder", "n_ladder", "deltas",
    "budgets", "rate_statistic", "radius_ladder", "instances",
}
SYSTEM_KEYS = {"kind", "alphabet", "forbidden", "window", "resolution", "precision"}
MEASURE_KEYS = {"kind", "weights", "orbit_length", "burn_in"}
BUDGET_KEYS = {"monte_carlo", "nodes", "points"}
INSTANCE_KEYS = {"system", "measures"}

EXAMPLE_DEFAULTS = {
    "seed": 0,
    "tasks": [TaskKind.EXAMPLE],
    "system": {"kind": SystemKind.INTERVAL_SHIFT, "window": 8, "resolution": 1024},
    "measures": [{"kind": MeasureKind.PRODUCT_LEBESGUE}],
    "eps_ladder": [0.125, 0.0625, 0.03125, 0.015625],
    "n_ladder": [2, 3, 4, 5, 6, 7, 8],
    "deltas": [0.5],
}


def _marks(node, path: Tuple = ()) -> Dict[Tuple, int]:
    """1-based line of every key path in a composed YAML tree."""
    marks = {path: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            marks.update(_marks(value_node, path + (key_node.value,)))
            marks[path + (key_node.value,)] = key_node.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for index, child in enumerate(node.value):
            marks.update(_marks(child, path + (index,)))
    return marks


class _Reader:
    """Typed access to the parsed document, raising ConfigError at the right line."""

    def __init__(self, marks: Dict[Tuple, int]):
        self.marks = marks

    def error(self, path: Tuple, message: str) -> ConfigError:
        line = None
        for end in range(len(path), -1, -1):
            line = self.marks.get(tuple(path[:end]))
            if line is not None:
                break
        where = ".".join(str(p) for p in path) or "config"
        return ConfigError(f"{where}: {message}", line=line)

    def mapping(self, value, path, allowed) -> Dict[str, Any]:
        if not isinstance(value, dict):
            raise self.error(path, f"expected a mapping, got {type(value).__name__}")
        unknown = sorted(set(value) - set(allowed), key=str)
        if unknown:
            raise self.error(path + (unknown[0],), f"unknown key {unknown[0]!r}")
        return value

    def integer(self, value, path, minimum=None) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(path, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise self.error(path, f"must be at least {minimum}, got {value}")
        return value

    def number(self, value, path, positive=False) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(path, f"expected a number, got {value!r}")
        if positive and value <= 0:
            raise self.error(path, f"must be positive, got {value}")
        return float(value)

    def sequence(self, value, path, minimum=1) -> list:
        if not isinstance(value, list):
            raise self.error(path, f"expected a list, got {type(value).__name__}")
        if len(value) < minimum:
            raise self.error(path, f"needs at least {minimum} entries, got {len(value)}")
        return value

    def choice(self, value, path, choices) -> str:
        if value not in choices:
            raise self.error(path, f"{value!r} is not one of {', '.join(choices)}")
        return str(value)


class ConfigService:
    """Load, validate and default experiment configs."""

    @classmethod
    def load(cls, path, seed: Optional[int] = None, out: Optional[str] = None) -> ExperimentConfig:
        """
        Read a YAML config file; seed and out override the file when given.

        Raises:
            ConfigError: unreadable, malformed or invalid config
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise ConfigError(f"cannot read {path}: {error}")
        return cls.parse(text, source=str(path), seed=seed, out=out)

    @classmethod
    def parse(cls, text: str, source: Optional[str] = None, seed: Optional[int] = None, out: Optional[str] = None) -> ExperimentConfig:
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            data = yaml.safe_load(text)
        except yaml.YAMLError as error:
            mark = getattr(error, "problem_mark", None)
            raise ConfigError(f"malformed YAML: {getattr(error, 'problem', error)}", line=mark.line + 1 if mark else None)
        if node is None or data is None:
            raise ConfigError("config is empty", line=1)
        return cls.validate(data, _marks(node), source=source, seed=seed, out=out)

    @classmethod
    def example_config(cls, eps_ladder=None, seed: Optional[int] = None, out: Optional[str] = None) -> ExperimentConfig:
        """Built-in interval-shift config behind `example` without a config file."""
        data = dict(EXAMPLE_DEFAULTS)
        if eps_ladder:
            data["eps_ladder"] = [float(eps) for eps in eps_ladder]
        return cls.validate(data, {}, source="<example>", seed=seed, out=out)

    @classmethod
    def validate(cls, data, marks, source=None, seed=None, out=None) -> ExperimentConfig:
        reader = _Reader(marks)
        data = reader.mapping(data, (), TOP_LEVEL_KEYS)
        if seed is None:
            if "seed" not in data:
                raise reader.error((), "seed is mandatory (or pass --seed)")
            seed = reader.integer(data["seed"], ("seed",), minimum=0)
        elif seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {seed}")

        tasks = reader.sequence(data.get("tasks", [TaskKind.VERIFY]), ("tasks",))
        tasks = tuple(reader.choice(task, ("tasks", i), TaskKind.values) for i, task in enumerate(tasks))
        if len(set(tasks)) != len(tasks):
            raise reader.error(("tasks",), "tasks repeat")

        if "system" not in data:
            raise reader.error((), "system is mandatory")
        system = cls._system(reader, data["system"], ("system",))
        measures = cls._measures(reader, data.get("measures", []), ("measures",), system)

        if "eps_ladder" not in data:
            raise reader.error((), "eps_ladder is mandatory")
        eps_ladder = tuple(
            reader.number(eps, ("eps_ladder", i), positive=True)
            for i, eps in enumerate(reader.sequence(data["eps_ladder"], ("eps_ladder",)))
        )
        if len(set(eps_ladder)) != len(eps_ladder):
            raise reader.error(("eps_ladder",), "eps values repeat")

        if "n_ladder" not in data:
            raise reader.error((), "n_ladder is mandatory")
        n_ladder = tuple(
            reader.integer(n, ("n_ladder", i), minimum=1)
            for i, n in enumerate(reader.sequence(data["n_ladder"], ("n_ladder",), minimum=3))
        )
        if any(b <= a for a, b in zip(n_ladder, n_ladder[1:])):
            raise reader.error(("n_ladder",), "n_ladder must be strictly increasing")

        deltas = tuple(
            reader.number(delta, ("deltas", i))
            for i, delta in enumerate(reader.sequence(data.get("deltas", [0.5]), ("deltas",)))
        )
        for i, delta in enumerate(deltas):
            if not 0 < delta < 1:
                raise reader.error(("deltas", i), f"delta must lie in (0, 1), got {delta}")

        budgets = cls._budgets(reader, data.get("budgets", {}), ("budgets",))
        statistic = reader.choice(
            data.get("rate_statistic", settings.DYNAMICS_RATE_STATISTIC), ("rate_statistic",), RateStatistic.values
        )
        radius_ladder = tuple(
            reader.number(rho, ("radius_ladder", i), positive=True)
            for i, rho in enumerate(reader.sequence(data.get("radius_ladder", [1.0, 0.5, 0.25]), ("radius_ladder",)))
        )

        instances = []
        for i, entry in enumerate(reader.sequence(data.get("instances", []), ("instances",), minimum=0)):
            path = ("instances", i)
            entry = reader.mapping(entry, path, INSTANCE_KEYS)
            if "system" not in entry:
                raise reader.error(path, "instance needs a system")
            instance_system = cls._system(reader, entry["system"], path + ("system",))
            instances.append(SuiteInstance(
                instance_system,
                cls._measures(reader, entry.get("measures", []), path + ("measures",), instance_system),
            ))

        if out is None:
            out = data.get("out")
            if out is not None and not isinstance(out, str):
                raise reader.error(("out",), f"expected a path, got {out!r}")
        if out is None:
            stem = Path(source).stem if source and not source.startswith("<") else "example"
            out = settings.DYNAMICS_OUTPUT_DIR / stem

        config = ExperimentConfig(
            system=system,
            measures=measures,
            eps_ladder=eps_ladder,
            n_ladder=n_ladder,
            deltas=deltas,
            budgets=budgets,
            seed=seed,
            out=Path(out),
            tasks=tasks,
            instances=tuple(instances),
            radius_ladder=radius_ladder,
            rate_statistic=statistic,
            source=source,
            raw=dict(data),
        )
        logger.debug("Validated config %s with seed %s", source, seed)
        return config

    @staticmethod
    def _system(reader: _Reader, value, path) -> SystemSpec:
        value = reader.mapping(value, path, SYSTEM_KEYS)
        if "kind" not in value:
            raise reader.error(path, "system needs a kind")
        forbidden = value.get("forbidden", [])
        # unquoted words such as 11 arrive as integers
        forbidden = tuple(str(word) for word in reader.sequence(forbidden, path + ("forbidden",), minimum=0))
        precision = value.get("precision")
        spec = SystemSpec(
            kind=reader.choice(value["kind"], path + ("kind",), SystemKind.values),
            alphabet=reader.integer(value.get("alphabet", 2), path + ("alphabet",), minimum=1),
            forbidden=forbidden,
            window=reader.integer(value.get("window", 4), path + ("window",), minimum=0),
            resolution=reader.integer(value.get("resolution", 64), path + ("resolution",), minimum=1),
            precision=None if precision is None else reader.number(precision, path + ("precision",), positive=True),
        )
        try:
            SystemService.make_system(spec)
        except DynamicsError as error:
            raise reader.error(path, str(error))
        return spec

    @staticmethod
    def _measures(reader: _Reader, value, path, system_spec: SystemSpec) -> Tuple[MeasureSpec, ...]:
        system = SystemService.make_system(system_spec)
        measures = []
        for i, entry in enumerate(reader.sequence(value, path, minimum=0)):
            where = path + (i,)
            entry = reader.mapping(entry, where, MEASURE_KEYS)
            if "kind" not in entry:
                raise reader.error(where, "measure needs a kind")
            weights = tuple(
                reader.number(w, where + ("weights", j))
                for j, w in enumerate(reader.sequence(entry.get("weights", []), where + ("weights",), minimum=0))
            )
            spec = MeasureSpec(
                kind=reader.choice(entry["kind"], where + ("kind",), MeasureKind.values),
                weights=weights,
                orbit_length=reader.integer(entry.get("orbit_length", 0), where + ("orbit_length",), minimum=0),
                burn_in=reader.number(entry.get("burn_in", 0.1), where + ("burn_in",)),
            )
            if spec.kind == MeasureKind.EMPIRICAL:
                # orbit storage is deferred to the run; only compatibility is checked here
                measures.append(spec)
                continue
            try:
                MeasureService.make_measure(spec, system)
            except DynamicsError as error:
                raise reader.error(where, str(error))
            measures.append(spec)
        return tuple(measures)

    @staticmethod
    def _budgets(reader: _Reader, value, path) -> Budgets:
        value = reader.mapping(value, path, BUDGET_KEYS)
        return Budgets(
            monte_carlo=reader.integer(
                value.get("monte_carlo", settings.DYNAMICS_MONTE_CARLO_DRAWS), path + ("monte_carlo",), minimum=0
            ),
            nodes=reader.integer(value.get("nodes", settings.DYNAMICS_NODE_BUDGET), path + ("nodes",), minimum=1),
            points=reader.integer(value.get("points", 16), path + ("points",), minimum=1),
        )
