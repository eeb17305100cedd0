"""Seeded experiment sweeps over fleet size, task count, layout, friction
and bid metric.

Each cell of the grid is generated once per seed and every variant runs on
that same scenario, so comparisons between variants are paired.
"""
import itertools
import json
import math
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd
from joblib import Parallel, delayed
from sklearn.utils import check_random_state
from typing_extensions import Self, TypeAlias

from .allocators import (
    Enumeration,
    TaskOrdering,
    fixed_order_cost,
    ranking_accuracy,
    run_auction,
)
from .bids import AuctionContext, OracleBid, metric_oracle
from .domain import CostWeights, LayoutKind
from .exceptions import DegenerateSampleError, SizeGuardError
from .metrics import MetricsReport
from .pipeline import FleetPipeline
from .rescheduler import EventLog, TriggerConfig
from .scenario import (
    DepotLayout,
    Scenario,
    ScenarioSpec,
    energy_distance_correlation,
    generate_scenario,
)
from .trajectory import TrajectoryOptions
from .utils import n_jobs_from_env

CELL_KEYS = ["n_robots", "n_tasks", "layout", "mu_lo", "mu_hi"]
RESULT_KEYS = CELL_KEYS + ["seed"]

Rows: TypeAlias = List[Dict[str, Any]]


@dataclass(frozen=True)
class Variant:
    """One way of solving a scenario."""

    name: str
    allocator: str = "auction"
    metric: str = "energy"
    execution: str = "ocp"


sweep_variants: Dict[str, Variant] = {
    v.name: v
    for v in (
        Variant("auction_energy", "auction", "energy"),
        Variant("auction_zoned", "auction", "zoned"),
        Variant("auction_oracle", "auction", "oracle"),
        Variant("B1", "nearest_task"),
        Variant("B2", "nearest_robot", execution="const_velocity"),
        Variant("B3", "auction", "distance"),
        Variant("B4", "enumeration", "zoned"),
    )
}


@dataclass(frozen=True)
class SweepConfig:
    """Grid and run settings of a sweep.

    ``options`` holds :class:`~amrfleet.trajectory.TrajectoryOptions`
    keyword arguments. ``accuracy_tasks`` caps the task subset on which the
    closed-form bid is ranked against the trajectory oracle; 0 disables the
    comparison. Robots start at a shared charging dock unless
    ``depot_layout`` is ``"stations"``.
    """

    fleet_sizes: Tuple[int, ...] = (2, 5, 10, 15, 20)
    task_counts: Tuple[int, ...] = (50,)
    layouts: Tuple[str, ...] = ("clustered",)
    friction_ranges: Tuple[Tuple[float, float], ...] = ((0.02, 0.02),)
    variants: Tuple[str, ...] = ("auction_energy", "auction_zoned", "B1", "B2", "B3")
    baselines: Tuple[str, ...] = ("B1", "B2", "B3")
    seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    station_count: int = 25
    payload_range: Tuple[float, float] = (0.0, 20.0)
    zone_grid: int = 2
    depot_layout: str = "dock"
    fault_rate: float = 0.0
    priority_rate: float = 0.0
    deviation_rate: float = 0.0
    horizon: float = 300.0
    simulate: bool = True
    refine: bool = True
    mode: str = "warm"
    options: Dict[str, Any] = field(default_factory=dict)
    weights: Dict[str, float] = field(default_factory=dict)
    correlation_samples: int = 200
    accuracy_tasks: int = 0
    n_jobs: Optional[int] = None

    def __post_init__(self) -> None:
        for name in ("fleet_sizes", "task_counts", "layouts", "variants", "seeds"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError("{} must be nonempty".format(name))
            object.__setattr__(self, name, value)
        object.__setattr__(self, "baselines", tuple(self.baselines))
        object.__setattr__(
            self,
            "friction_ranges",
            tuple((float(lo), float(hi)) for lo, hi in self.friction_ranges),
        )
        if not self.friction_ranges:
            raise ValueError("friction_ranges must be nonempty")
        for layout in self.layouts:
            LayoutKind(layout)
        DepotLayout(self.depot_layout)
        unknown = set(self.variants) | set(self.baselines)
        unknown -= set(sweep_variants)
        if unknown:
            raise ValueError(
                "Unknown variants {}, expected from {}".format(
                    sorted(unknown), sorted(sweep_variants)
                )
            )
        TrajectoryOptions(**self.options)
        CostWeights(**self.weights)

    @property
    def run_variants(self) -> List[str]:
        return sorted(set(self.variants) | set(self.baselines))

    def cells(self) -> List[Tuple[int, int, str, Tuple[float, float], int]]:
        return list(
            itertools.product(
                self.fleet_sizes,
                self.task_counts,
                self.layouts,
                self.friction_ranges,
                self.seeds,
            )
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        data = dict(data)
        for name in ("friction_ranges",):
            if name in data:
                data[name] = tuple(tuple(r) for r in data[name])
        if "payload_range" in data:
            data["payload_range"] = tuple(data["payload_range"])
        return cls(**data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> Self:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class SweepResult:
    """Tables produced by :func:`sweep`.

    ``results`` and ``summary`` are reproducible; wall-clock values live in
    ``timings`` only.
    """

    results: pd.DataFrame
    summary: pd.DataFrame
    timings: pd.DataFrame
    failures: pd.DataFrame
    report: MetricsReport

    def save(self, out_dir: Union[str, Path]) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.results.to_csv(out / "results.csv", index=False)
        self.summary.to_csv(out / "summary.csv", index=False)
        self.timings.to_csv(out / "timings.csv", index=False)
        self.failures.to_csv(out / "failures.csv", index=False)
        self.report.reschedules.to_csv(out / "reschedules.csv", index=False)

    def __str__(self) -> str:
        return "Sweep Result:\n\truns: {}\n\tfailures: {}\n{}".format(
            len(self.results), len(self.failures), self.summary.to_string(index=False)
        )


def _cell_extras(
    config: SweepConfig, scenario: Scenario, context: AuctionContext, seed: int
) -> Dict[str, float]:
    """Correlation and oracle-ranking columns shared by every variant of a
    cell."""
    extras = {
        "r": math.nan,
        "winner_accuracy": math.nan,
        "mean_abs_rel_error": math.nan,
        "gap_vs_enumeration": math.nan,
    }
    params = scenario.robots[0].params
    if config.correlation_samples >= 2 and scenario.tasks:
        try:
            extras["r"] = energy_distance_correlation(
                scenario.stations,
                scenario.tasks,
                params,
                scenario.friction,
                config.correlation_samples,
                seed,
            )
        except DegenerateSampleError:
            pass
    if config.accuracy_tasks > 0 and scenario.tasks:
        random_state = check_random_state(seed)
        k = min(config.accuracy_tasks, len(scenario.tasks))
        picked = sorted(random_state.choice(len(scenario.tasks), k, replace=False))
        subset = [scenario.tasks[i] for i in picked]
        robots = list(scenario.robots)
        while OracleBid.pair_count(len(robots), k) > context.oracle_max_pairs:
            if len(robots) == 1:
                break
            robots = robots[:-1]
        try:
            accuracy, error = ranking_accuracy(
                subset, robots, "energy", "oracle", context
            )
            extras["winner_accuracy"], extras["mean_abs_rel_error"] = accuracy, error
        except SizeGuardError:
            pass
    optimal = Enumeration(ordering=TaskOrdering.OPTIMAL.value)
    n, m = len(scenario.robots), len(scenario.tasks)
    if n <= optimal.max_robots and 0 < m <= optimal.max_tasks:
        oracle = metric_oracle("zoned", context)
        robots, tasks = list(scenario.robots), list(scenario.tasks)
        schedule, _ = run_auction(robots, tasks, "zoned", context)
        optimal.allocate(robots, tasks, context)
        auction_cost = fixed_order_cost(
            schedule, robots, tasks, oracle, TaskOrdering.OPTIMAL
        )
        if optimal.cost_ > 0.0:
            extras["gap_vs_enumeration"] = (
                (auction_cost - optimal.cost_) / optimal.cost_ * 100.0
            )
    return extras


def run_cell(
    config: SweepConfig,
    n_robots: int,
    n_tasks: int,
    layout: str,
    mu_range: Tuple[float, float],
    seed: int,
) -> Tuple[Rows, Rows, Rows, List[EventLog]]:
    """Run every variant on one generated scenario.

    Returns result rows, timing rows, failure rows and the event logs.
    """
    key = {
        "n_robots": n_robots,
        "n_tasks": n_tasks,
        "layout": layout,
        "mu_lo": mu_range[0],
        "mu_hi": mu_range[1],
        "seed": seed,
    }
    spec = ScenarioSpec(
        n_robots=n_robots,
        n_tasks=n_tasks,
        layout=LayoutKind(layout),
        station_count=max(config.station_count, n_robots),
        payload_range=config.payload_range,
        mu_range=mu_range,
        zone_grid=config.zone_grid,
        fault_rate=config.fault_rate,
        priority_rate=config.priority_rate,
        deviation_rate=config.deviation_rate,
        horizon=config.horizon,
        depot_layout=DepotLayout(config.depot_layout),
        seed=seed,
    )
    rows: Rows = []
    timings: Rows = []
    failures: Rows = []
    logs: List[EventLog] = []
    try:
        scenario = generate_scenario(spec)
    except (ValueError, RuntimeError) as e:
        failures.append(
            {**key, "variant": "", "error": type(e).__name__, "message": str(e)}
        )
        return rows, timings, failures, logs
    options = TrajectoryOptions(**config.options)
    weights = CostWeights(**config.weights)
    extras: Dict[str, float] = {}
    for name in config.run_variants:
        variant = sweep_variants[name]
        pipeline = FleetPipeline(
            allocator=variant.allocator,
            metric=variant.metric,
            execution=variant.execution,
            weights=weights,
            options=options,
            refine=config.refine,
            simulate=config.simulate,
            mode=config.mode,
            trigger=TriggerConfig(),
            n_jobs=1,
        )
        try:
            if not extras:
                context = pipeline.context_for(scenario)
                extras = _cell_extras(config, scenario, context, seed)
            pipeline.fit(scenario)
        except (ValueError, RuntimeError, FloatingPointError) as e:
            failures.append(
                {
                    **key,
                    "variant": name,
                    "error": type(e).__name__,
                    "message": str(e) or traceback.format_exc(limit=1),
                }
            )
            continue
        report = pipeline.report()
        rows.append({**key, "variant": name, "status": "ok", **report, **extras})
        timings.append({**key, "variant": name, **pipeline.timings_.to_dict()})
        logs.append(pipeline.event_log_)
    return rows, timings, failures, logs


def sweep(config: SweepConfig, verbose: int = 0) -> SweepResult:
    """Run every cell of ``config`` and aggregate the paired comparisons.

    Cells run in parallel up to ``config.n_jobs`` workers (default
    ``AMRFLEET_N_JOBS``). A failing run is recorded in ``failures`` and the
    sweep continues.
    """
    cells = config.cells()
    outputs = Parallel(n_jobs=n_jobs_from_env(config.n_jobs), verbose=verbose)(
        delayed(run_cell)(config, *cell) for cell in cells
    )
    rows: Rows = []
    timings: Rows = []
    failures: Rows = []
    logs: List[EventLog] = []
    for r, t, f, lg in outputs:
        rows.extend(r)
        timings.extend(t)
        failures.extend(f)
        logs.extend(lg)
    order = RESULT_KEYS + ["variant"]
    results = pd.DataFrame(rows)
    if not results.empty:
        results = results.sort_values(order, ignore_index=True)
    timing_frame = pd.DataFrame(timings)
    if not timing_frame.empty:
        timing_frame = timing_frame.sort_values(order, ignore_index=True)
    failure_frame = pd.DataFrame(
        failures, columns=RESULT_KEYS + ["variant", "error", "message"]
    )
    if results.empty:
        report = MetricsReport(pd.DataFrame(), EventLog().summary(), [])
    else:
        report = MetricsReport.from_results(
            results, CELL_KEYS, list(config.baselines), event_logs=logs
        )
    if verbose:
        print(report)
    return SweepResult(results, report.summary, timing_frame, failure_frame, report)
