"""
Value types shared by the dynamics services.

Nothing here touches the database: the choice enums reuse Django's
TextChoices so labels travel with the values, and the records are frozen
dataclasses that the services build and never mutate.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from django.db import models


class SystemKind(models.TextChoices):
    FULL_SHIFT = 'full_shift', 'Full shift'
    SFT = 'sft', 'Subshift of finite type'
    INTERVAL_SHIFT = 'interval_shift', 'Shift on [0,1]^Z'
    CIRCLE_DOUBLING = 'circle_doubling', 'Circle doubling'


SYMBOLIC_KINDS = (SystemKind.FULL_SHIFT, SystemKind.SFT)


class Exactness(models.TextChoices):
    EXACT_ENUMERATION = 'exact_enumeration', 'Exact enumeration'
    GRID_SAMPLE = 'grid_sample', 'Grid sample'
    ORBIT_SAMPLE = 'orbit_sample', 'Orbit sample'


class Bound(models.TextChoices):
    EXACT = 'exact', 'Exact'
    LOWER_BOUND = 'lower_bound', 'Lower bound'
    UPPER_BOUND = 'upper_bound', 'Upper bound'
    MIXED = 'mixed', 'Mixed'


class CountMethod(models.TextChoices):
    CLOSED_FORM = 'closed_form', 'Closed form'
    BRANCH_AND_BOUND = 'branch_and_bound', 'Branch and bound'
    GREEDY = 'greedy', 'Greedy'
    LATTICE = 'lattice', 'Product lattice'
    CIRCULANT = 'circulant', 'Circulant graph'


class CountMode(models.TextChoices):
    GREEDY = 'greedy', 'Greedy'
    EXACT = 'exact', 'Exact'


class RateMode(models.TextChoices):
    UPPER = 'upper', 'Upper (limsup)'
    LOWER = 'lower', 'Lower (liminf)'


class RateStatistic(models.TextChoices):
    AVERAGE = 'average', '(1/n) log c_n'
    INCREMENT = 'increment', 'Log-count increment per step'


class MassMethod(models.TextChoices):
    EXACT = 'exact', 'Exact'
    MONTE_CARLO = 'monte_carlo', 'Monte Carlo'
    BOX_BOUNDS = 'box_bounds', 'Box bounds'


class MeasureKind(models.TextChoices):
    BERNOULLI = 'bernoulli', 'Bernoulli'
    PARRY = 'parry', 'Parry (maximal entropy Markov)'
    PRODUCT_LEBESGUE = 'product_lebesgue', 'Product Lebesgue'
    EMPIRICAL = 'empirical', 'Empirical orbit'


class Verdict(models.TextChoices):
    EXACT_PASS = 'exact_pass', 'Exact pass'
    STATISTICAL_PASS = 'statistical_pass', 'Statistical pass'
    FAIL = 'fail', 'Fail'
    PROBE = 'probe', 'Probe (reported only)'


class TaskKind(models.TextChoices):
    GROWTH = 'growth', 'Growth rates'
    MDIM = 'mdim', 'Metric mean dimension'
    KATOK = 'katok', 'Katok entropy'
    BRIN_KATOK = 'brin_katok', 'Brin-Katok entropy'
    SHAPIRA = 'shapira', 'Shapira entropy'
    LOCAL_ENTROPY = 'local_entropy', 'Local entropy function'
    VERIFY = 'verify', 'Inequality suite'
    EXAMPLE = 'example', 'Interval shift example'


class TaskStatus(models.TextChoices):
    PENDING = 'PENDING', 'Pending'
    PROCESSING = 'PROCESSING', 'Processing'
    COMPLETED = 'COMPLETED', 'Completed'
    DEGRADED = 'DEGRADED', 'Degraded'
    FAILED = 'FAILED', 'Failed'


@dataclass(frozen=True)
class Point:
    """A truncated point: values[j] is coordinate lo + j."""

    values: Tuple[Any, ...]
    lo: int = 0

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    @property
    def radius(self) -> int:
        """Largest r with [-r, r] inside the window (negative if 0 is outside)."""
        return min(-self.lo, self.hi)

    def coordinate(self, index: int):
        return self.values[index - self.lo]

    def __str__(self):
        return f"Point(lo={self.lo}, values={list(self.values)})"


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    alphabet: int = 2
    forbidden: Tuple[str, ...] = ()
    window: int = 4
    resolution: int = 64
    precision: Optional[float] = None


@dataclass(frozen=True, eq=False)
class FinitePointSet:
    """
    Finite stand-in for X or for a compact K inside it.

    `values` has one row per point over the shared window [lo, hi] (a single
    column for circle maps). It is None for product grids too large to
    materialize; only lattice counts accept those.
    """

    kind: str
    lo: int
    hi: int
    values: Optional[np.ndarray]
    exactness: str
    density: Optional[float] = None
    resolution: Optional[int] = None

    @property
    def materialized(self) -> bool:
        return self.values is not None

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @property
    def size(self) -> int:
        """Number of points; implicit grids can exceed what len() may return."""
        if self.values is not None:
            return int(self.values.shape[0])
        return int(self.resolution) ** self.width

    def __len__(self) -> int:
        return self.size

    def point(self, index: int) -> Point:
        row = self.values[index]
        return Point(values=tuple(row.tolist()), lo=self.lo)

    def points(self):
        return [self.point(i) for i in range(len(self))]

    def subset(self, indices) -> "FinitePointSet":
        return FinitePointSet(
            kind=self.kind,
            lo=self.lo,
            hi=self.hi,
            values=self.values[np.asarray(indices, dtype=int)],
            exactness=self.exactness,
            density=self.density,
            resolution=self.resolution,
        )


@dataclass(frozen=True)
class CountResult:
    value: int
    bound: str
    method: str
    n: int
    epsilon: float
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_exact(self) -> bool:
        return self.bound == Bound.EXACT


@dataclass(frozen=True)
class MassEstimate:
    value: float
    stderr: float
    method: str
    lower: float
    upper: float
    draws: int = 0
    seed: Optional[int] = None


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float


@dataclass(frozen=True)
class RateEstimate:
    """Growth rate of a count ladder, in nats per step."""

    value: float
    mode: str
    statistic: str
    n_range: Tuple[int, int]
    slope_fit: SlopeFit
    tail_stat: float
    average_stat: float
    increment_stat: float
    counts: Tuple[Tuple[int, float], ...]
    bound: str = Bound.EXACT
    interval: Optional[Tuple[float, float]] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def slope_gap(self) -> float:
        return abs(self.value - self.slope_fit.slope)


@dataclass(frozen=True)
class MdimEstimate:
    per_eps: Tuple[Tuple[float, RateEstimate], ...]
    slope: Optional[float]
    upper_lower: str
    intercept: Optional[float] = None
    dropped: Tuple[float, ...] = ()


@dataclass(frozen=True)
class LocalEntropyEstimate:
    per_point: Tuple[Tuple[Point, RateEstimate], ...]
    center: float
    spread: float
    flagged: bool = False
    interval: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class Cell:
    center: Point
    radius: float


@dataclass(frozen=True)
class Cover:
    cells: Tuple[Cell, ...]
    construction: str
    disjoint: bool = False
    diam: Optional[float] = None
    leb_lower: Optional[float] = None


@dataclass(frozen=True, eq=False)
class JoinedCover:
    """
    Realized itineraries of U^n on a reference set.

    members[c] holds the reference indices whose orbit segment follows
    cells[c]; point_cells[p] lists the itineraries realized by point p.
    """

    base: Cover
    n: int
    cells: Tuple[Tuple[int, ...], ...]
    members: Tuple[np.ndarray, ...]
    point_cells: Tuple[Tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class MeasureSpec:
    kind: str
    weights: Tuple[float, ...] = ()
    orbit_length: int = 0
    burn_in: float = 0.1


@dataclass(frozen=True)
class ChainInstance:
    parameters: Dict[str, Any]
    left: float
    middle: float
    right: float
    verdict: str
    z: Optional[float] = None


@dataclass
class ChainReport:
    chain_id: str
    instances: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        verdicts = {instance.verdict for instance in self.instances}
        if not verdicts:
            return Verdict.PROBE
        if Verdict.FAIL in verdicts:
            return Verdict.FAIL
        if verdicts == {Verdict.PROBE}:
            return Verdict.PROBE
        if Verdict.STATISTICAL_PASS in verdicts:
            return Verdict.STATISTICAL_PASS
        return Verdict.EXACT_PASS

    @property
    def failures(self) -> int:
        return sum(1 for instance in self.instances if instance.verdict == Verdict.FAIL)


@dataclass(frozen=True)
class ExampleRow:
    epsilon: float
    brin_katok: float
    interval: Optional[Tuple[float, float]]
    lower: float
    upper: float
    separated_rate: Optional[float]
    normalized: Optional[float]
    verdict: str


@dataclass(frozen=True)
class ExampleReport:
    """Brin-Katok and separated rates of product Lebesgue on the interval shift."""

    rows: Tuple[ExampleRow, ...]
    brin_katok_slope: Optional[float]
    separated_slope: Optional[float]
    margin: int
    dropped: Tuple[float, ...] = ()


@dataclass(frozen=True)
class Budgets:
    monte_carlo: int
    nodes: int
    points: int = 16


@dataclass(frozen=True)
class SuiteInstance:
    """A system with the measures the inequality suite pairs it with."""

    system: SystemSpec
    measures: Tuple[MeasureSpec, ...] = ()

    @property
    def label(self) -> str:
        if self.system.forbidden:
            return f"{self.system.kind}[{','.join(self.system.forbidden)}]"
        return f"{self.system.kind}({self.system.alphabet})" if self.system.kind == SystemKind.FULL_SHIFT else self.system.kind


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemSpec
    measures: Tuple[MeasureSpec, ...]
    eps_ladder: Tuple[float, ...]
    n_ladder: Tuple[int, ...]
    deltas: Tuple[float, ...]
    budgets: Budgets
    seed: int
    out: Path
    tasks: Tuple[str, ...]
    instances: Tuple[SuiteInstance, ...] = ()
    radius_ladder: Tuple[float, ...] = (1.0, 0.5, 0.25)
    rate_statistic: str = RateStatistic.INCREMENT
    source: Optional[str] = None
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def suite(self) -> Tuple[SuiteInstance, ...]:
        return (SuiteInstance(self.system, self.measures),) + tuple(self.instances)


@dataclass
class TaskResult:
    """Outcome of one configured task: CSV rows, summary objects and chain reports."""

    task: str
    status: str = TaskStatus.PENDING
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    chains: list = field(default_factory=list)
    example: Optional[ExampleReport] = None
    error: Optional[str] = None

    @property
    def check_failures(self) -> int:
        failures = sum(report.failures for report in self.chains)
        if self.example is not None:
            failures += sum(1 for row in self.example.rows if row.verdict == Verdict.FAIL)
        return failures
