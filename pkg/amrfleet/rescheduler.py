"""Event-triggered partial rescheduling.

Three indicators drive the switching signal: a robot fault, the arrival of a
priority task, and a relative energy deviation above ``delta`` on a robot
whose last deviation reschedule is at least ``min_interval`` seconds old.
When the signal fires, only the unstarted tasks of the affected robots and
the newly arrived tasks are re-auctioned; every started task stays where it
is. The functions here are pure; :mod:`amrfleet.simulation` owns the clock.
"""
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import (
    Dict,
    FrozenSet,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
import pandas as pd

from .allocators.auction import run_auction
from .bids import AuctionContext, BaseBidMetric, BidMetricKind
from .domain import Point, Robot, Schedule, Task, robot_index, validate_partition
from .energy import route_energy_closed_form
from .exceptions import RescheduleInfeasibleError
from .input_validation import check_finite, check_nonnegative, check_positive


@dataclass(frozen=True)
class TriggerConfig:
    """Thresholds of the switching signal.

    ``delta`` is the relative energy deviation that fires a robot,
    ``min_interval`` the dwell time in seconds between two deviation
    reschedules of the same robot and ``check_interval`` the monitoring
    period of the simulator.
    """

    delta: float = 0.10
    min_interval: float = 5.0
    check_interval: float = 1.0

    def __post_init__(self) -> None:
        check_positive(self.delta, "delta")
        check_positive(self.min_interval, "min_interval")
        check_positive(self.check_interval, "check_interval")


class DisruptionKind(str, Enum):
    FAULT = "fault"
    PRIORITY_TASK = "priority_task"
    ENERGY_DEVIATION = "energy_deviation"


@dataclass(frozen=True)
class DisruptionEvent:
    """Something that happens to the fleet at time ``t``.

    An energy-deviation event makes its robot draw ``magnitude`` more energy
    than planned from ``t`` on; the deviation indicator then fires from the
    measured energy, not from the event itself.
    """

    kind: DisruptionKind
    t: float
    robot: Optional[int] = None
    task: Optional[Task] = None
    magnitude: float = 0.25

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DisruptionKind(self.kind))
        check_nonnegative(self.t, "t")
        check_nonnegative(self.magnitude, "magnitude")
        if self.kind == DisruptionKind.PRIORITY_TASK:
            if self.task is None:
                raise ValueError("A priority_task event needs a task")
        elif self.robot is None:
            raise ValueError("A {} event needs a robot".format(self.kind.value))


@dataclass(frozen=True)
class RobotStatus:
    """Snapshot of one robot at a decision time.

    ``position`` and ``heading`` describe where the robot is free to take new
    work, at the end of its committed prefix, reached at ``t_free``; for a
    faulted robot this is where it parked.
    """

    robot: int
    position: Point
    heading: float = 0.0
    t_free: float = 0.0
    active: bool = True
    in_progress: Optional[int] = None
    energy_actual: float = 0.0
    energy_predicted: float = 0.0
    last_deviation_reschedule: float = -math.inf


@dataclass(frozen=True)
class FleetState:
    t: float
    robots: Mapping[int, RobotStatus]
    completed: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        check_finite(self.t, "t")
        object.__setattr__(self, "robots", dict(sorted(self.robots.items())))
        object.__setattr__(self, "completed", frozenset(self.completed))

    @property
    def active_robots(self) -> List[int]:
        return [i for i, s in self.robots.items() if s.active]

    def with_status(self, status: RobotStatus) -> "FleetState":
        return replace(self, robots={**self.robots, status.robot: status})


class TriggerDecision(NamedTuple):
    fire: bool
    faults: Tuple[int, ...] = ()
    priority_tasks: Tuple[Task, ...] = ()
    deviant: Tuple[int, ...] = ()
    deviations: Mapping[int, float] = {}

    @property
    def kind(self) -> str:
        kinds = [
            name
            for name, present in (
                (DisruptionKind.FAULT.value, self.faults),
                (DisruptionKind.PRIORITY_TASK.value, self.priority_tasks),
                (DisruptionKind.ENERGY_DEVIATION.value, self.deviant),
            )
            if present
        ]
        if not kinds:
            return "none"
        return kinds[0] if len(kinds) == 1 else "combined"

    @property
    def affected_robots(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.faults) | set(self.deviant)))


class CostToGo(NamedTuple):
    value: float
    unstarted_count: int
    k: int


def relative_deviation(actual: float, predicted: float) -> float:
    """``|actual - predicted| / predicted``; 0 while nothing is predicted."""
    if predicted <= 0.0:
        return 0.0
    return abs(actual - predicted) / predicted


def evaluate_triggers(
    fleet_state: FleetState,
    predictions: Optional[Mapping[int, float]],
    events_at_t: Sequence[DisruptionEvent],
    config: TriggerConfig,
    t: Optional[float] = None,
) -> TriggerDecision:
    """Evaluate the fault, priority and deviation indicators at ``t``.

    ``predictions`` overrides the predicted energy held in each robot's
    status. Faults on robots that are already inactive are ignored.
    """
    t = fleet_state.t if t is None else t
    predictions = predictions or {}
    faults = sorted(
        {
            e.robot
            for e in events_at_t
            if e.kind == DisruptionKind.FAULT
            and e.robot is not None
            and e.robot in fleet_state.robots
            and fleet_state.robots[e.robot].active
        }
    )
    priority = tuple(
        e.task
        for e in sorted(events_at_t, key=lambda e: (e.t, e.task.id if e.task else -1))
        if e.kind == DisruptionKind.PRIORITY_TASK and e.task is not None
    )
    deviations: Dict[int, float] = {}
    deviant = []
    for i, status in fleet_state.robots.items():
        if not status.active or i in faults:
            continue
        predicted = predictions.get(i, status.energy_predicted)
        dev = relative_deviation(status.energy_actual, predicted)
        deviations[i] = dev
        elapsed = t - status.last_deviation_reschedule
        if dev > config.delta and elapsed >= config.min_interval:
            deviant.append(i)
    fire = bool(faults or priority or deviant)
    return TriggerDecision(fire, tuple(faults), priority, tuple(deviant), deviations)


def zeno_budget(
    T: float,
    n: int,
    config: TriggerConfig,
    fault_count: int = 0,
    priority_count: int = 0,
) -> int:
    """Upper bound on the number of reschedules over a horizon of ``T``
    seconds: every fault and priority arrival once, plus one deviation
    reschedule per robot per ``min_interval``."""
    check_positive(T, "T")
    if n < 0 or fault_count < 0 or priority_count < 0:
        raise ValueError("Counts must be nonnegative")
    return fault_count + priority_count + n * (math.floor(T / config.min_interval) + 1)


def remaining_energy(
    robot: Robot, start: Point, sequence: Sequence[Task], context: AuctionContext
) -> float:
    """Closed-form energy of executing ``sequence`` from ``start``."""
    return route_energy_closed_form(
        start, sequence, robot.params, context.friction, context.regen
    )


def track_cost_to_go(
    schedule: Schedule,
    fleet_state: FleetState,
    rho: float,
    robots: Sequence[Robot],
    tasks: Mapping[int, Task],
    context: Optional[AuctionContext] = None,
    k: int = 0,
    pending: Sequence[Task] = (),
) -> CostToGo:
    """Predicted remaining cost ``sum_i J_rem_i + rho * |U|``.

    ``U`` holds every unstarted task of the schedule plus the ``pending``
    tasks no robot holds yet. Only active robots contribute energy.
    """
    context = context or AuctionContext()
    fleet = robot_index(robots)
    energy = []
    unstarted = len(pending)
    for i in schedule.robot_ids:
        seq = schedule.unstarted(i)
        unstarted += len(seq)
        status = fleet_state.robots.get(i)
        if status is None or not status.active or not seq:
            continue
        sequence = [tasks[t] for t in seq]
        energy.append(remaining_energy(fleet[i], status.position, sequence, context))
    return CostToGo(math.fsum(energy) + rho * unstarted, unstarted, k)


@dataclass(frozen=True)
class EventLogEntry:
    t: float
    kind: str
    robots: Tuple[int, ...]
    tasks_reassigned: int
    latency: float
    v_before: float
    v_after: float
    overhead_vs_cold: float = math.nan
    mode: str = "warm"

    def __str__(self) -> str:
        return "[t={:8.2f}] {} robots {}: {} tasks reassigned ({:.2f} ms)".format(
            self.t,
            self.kind,
            list(self.robots),
            self.tasks_reassigned,
            self.latency * 1e3,
        )


@dataclass
class EventLog:
    entries: List[EventLogEntry] = field(default_factory=list)

    def append(self, entry: EventLogEntry) -> None:
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def count(self, kind: Optional[str] = None) -> int:
        return sum(1 for e in self.entries if kind is None or e.kind == kind)

    def to_frame(self) -> pd.DataFrame:
        columns = [
            "t",
            "kind",
            "robots",
            "tasks_reassigned",
            "latency",
            "V_before",
            "V_after",
            "overhead_vs_cold",
            "mode",
        ]
        rows = [
            (
                e.t,
                e.kind,
                " ".join(str(r) for r in e.robots),
                e.tasks_reassigned,
                e.latency,
                e.v_before,
                e.v_after,
                e.overhead_vs_cold,
                e.mode,
            )
            for e in self.entries
        ]
        return pd.DataFrame(rows, columns=columns)

    def summary(self) -> pd.DataFrame:
        """Per-kind count, latency mean/max in ms, mean tasks reassigned and
        mean predicted overhead against a cold re-auction in percent."""
        columns = [
            "kind",
            "count",
            "latency_mean_ms",
            "latency_max_ms",
            "tasks_reassigned_mean",
            "overhead_vs_cold_pct",
        ]
        frame = self.to_frame()
        if frame.empty:
            return pd.DataFrame(columns=columns)
        rows = []
        for kind, group in frame.groupby("kind", sort=True):
            overhead = group["overhead_vs_cold"].dropna()
            rows.append(
                (
                    kind,
                    len(group),
                    group["latency"].mean() * 1e3,
                    group["latency"].max() * 1e3,
                    group["tasks_reassigned"].mean(),
                    overhead.mean() if len(overhead) else np.nan,
                )
            )
        return pd.DataFrame(rows, columns=columns)


def _bidders(
    fleet_state: FleetState, decision: TriggerDecision, robots: Sequence[Robot]
) -> List[Robot]:
    fleet = robot_index(robots)
    return [
        fleet[i]
        for i in fleet_state.active_robots
        if i not in decision.faults and i in fleet
    ]


def _after_faults(fleet_state: FleetState, decision: TriggerDecision) -> FleetState:
    state = fleet_state
    for i in decision.faults:
        state = state.with_status(replace(state.robots[i], active=False))
    return state


def _expected_tasks(schedule: Schedule, decision: TriggerDecision) -> List[int]:
    return sorted(schedule.task_ids() | {t.id for t in decision.priority_tasks})


def _reauction(
    schedule: Schedule,
    fleet_state: FleetState,
    decision: TriggerDecision,
    metric: Union[str, BidMetricKind, BaseBidMetric],
    robots: Sequence[Robot],
    tasks: Mapping[int, Task],
    context: AuctionContext,
    released: Sequence[int],
) -> Tuple[Schedule, List[int]]:
    """Move ``released`` robots' unstarted tasks, faulted robots' in-progress
    tasks and the priority tasks into a pool and auction it among the
    remaining active robots, appending to what they keep."""
    fleet = robot_index(robots)
    all_tasks = {**tasks, **{t.id: t for t in decision.priority_tasks}}
    pool: List[int] = []
    kept: Dict[int, Tuple[int, ...]] = {}
    cursor: Dict[int, int] = {}
    for i in schedule.robot_ids:
        frozen, unstarted = schedule.frozen(i), schedule.unstarted(i)
        if i in decision.faults:
            in_progress = fleet_state.robots[i].in_progress
            pool.extend(t for t in frozen if t == in_progress)
            pool.extend(unstarted)
            frozen = tuple(t for t in frozen if t != in_progress)
            kept[i], cursor[i] = frozen, len(frozen)
        elif i in released:
            pool.extend(unstarted)
            kept[i], cursor[i] = frozen, len(frozen)
        else:
            kept[i], cursor[i] = frozen + unstarted, len(frozen)
    pool.extend(t.id for t in decision.priority_tasks)
    pool = sorted(set(pool))
    bidders = _bidders(fleet_state, decision, robots)
    if pool and not bidders:
        raise RescheduleInfeasibleError(pool)
    starts: Dict[int, Point] = {}
    for r in bidders:
        carried = kept[r.id][cursor[r.id] :]
        if carried:
            starts[r.id] = all_tasks[carried[-1]].dropoff
        else:
            starts[r.id] = fleet_state.robots[r.id].position
    scale = dict(context.bid_scale)
    for i in decision.deviant:
        status = fleet_state.robots[i]
        if status.energy_predicted > 0.0 and status.energy_actual > 0.0:
            scale[i] = status.energy_actual / status.energy_predicted
    bidding = replace(context, bid_scale=scale)
    won, _ = run_auction(bidders, [all_tasks[t] for t in pool], metric, bidding, starts)
    sequences = {
        i: kept[i] + won.sequences.get(i, ()) for i in schedule.robot_ids
    }
    after = _after_faults(fleet_state, decision)
    energy = {}
    for i, seq in sequences.items():
        status = after.robots.get(i)
        if status is None or not status.active or i not in fleet:
            energy[i] = 0.0
            continue
        remaining = [all_tasks[t] for t in seq[cursor[i] :]]
        energy[i] = remaining_energy(fleet[i], status.position, remaining, context)
    new = Schedule(sequences, energy, cursor)
    assert validate_partition(new, _expected_tasks(schedule, decision))
    return new, pool


def _predicted_total(schedule: Schedule, fleet_state: FleetState) -> float:
    return math.fsum(
        e
        for i, e in schedule.predicted_energy.items()
        if i in fleet_state.robots and fleet_state.robots[i].active
    )


def _reschedule(
    mode: str,
    schedule: Schedule,
    fleet_state: FleetState,
    decision: TriggerDecision,
    metric: Union[str, BidMetricKind, BaseBidMetric],
    robots: Sequence[Robot],
    tasks: Mapping[int, Task],
    context: Optional[AuctionContext],
    rho: float,
    k: int,
    compare_cold: bool,
) -> Tuple[Schedule, EventLogEntry]:
    context = context or AuctionContext()
    v_before = track_cost_to_go(
        schedule, fleet_state, rho, robots, tasks, context, k, decision.priority_tasks
    )
    released = (
        list(decision.deviant) if mode == "warm" else list(fleet_state.robots)
    )
    start = time.perf_counter()
    new, pool = _reauction(
        schedule, fleet_state, decision, metric, robots, tasks, context, released
    )
    latency = time.perf_counter() - start
    after = _after_faults(fleet_state, decision)
    all_tasks = {**tasks, **{t.id: t for t in decision.priority_tasks}}
    v_after = track_cost_to_go(new, after, rho, robots, all_tasks, context, k + 1)
    overhead = math.nan
    if compare_cold and mode == "warm":
        cold, _ = _reauction(
            schedule,
            fleet_state,
            decision,
            metric,
            robots,
            tasks,
            context,
            list(fleet_state.robots),
        )
        cold_total = _predicted_total(cold, after)
        if cold_total > 0.0:
            overhead = (_predicted_total(new, after) - cold_total) / cold_total * 100.0
    entry = EventLogEntry(
        t=fleet_state.t,
        kind=decision.kind,
        robots=decision.affected_robots,
        tasks_reassigned=len(pool),
        latency=latency,
        v_before=v_before.value,
        v_after=v_after.value,
        overhead_vs_cold=overhead,
        mode=mode,
    )
    return new, entry


def warm_start_reschedule(
    schedule: Schedule,
    fleet_state: FleetState,
    decision: TriggerDecision,
    metric: Union[str, BidMetricKind, BaseBidMetric],
    robots: Sequence[Robot],
    tasks: Mapping[int, Task],
    context: Optional[AuctionContext] = None,
    rho: float = 1.0,
    k: int = 0,
    compare_cold: bool = True,
) -> Tuple[Schedule, EventLogEntry]:
    """Re-auction only what the triggering event touches.

    Parameters
    ----------
    schedule :
        Current schedule; ``cursor`` marks each robot's started prefix.
    fleet_state :
        Robot snapshot at the decision time, faults not yet applied.
    decision :
        Output of :func:`evaluate_triggers`.
    metric :
        Bid metric of the re-auction.
    robots :
        The whole fleet.
    tasks :
        Every task the schedule names.
    rho :
        Weight of the unstarted-task count in the cost-to-go.
    k :
        Index of this reschedule.
    compare_cold :
        Also price a full re-auction and log the predicted overhead.

    Returns
    -------
    Tuple[Schedule, EventLogEntry]

    Raises
    ------
    RescheduleInfeasibleError
        Tasks need a new owner but no active robot is left.
    """
    return _reschedule(
        "warm",
        schedule,
        fleet_state,
        decision,
        metric,
        robots,
        tasks,
        context,
        rho,
        k,
        compare_cold,
    )


def cold_reschedule(
    schedule: Schedule,
    fleet_state: FleetState,
    decision: TriggerDecision,
    metric: Union[str, BidMetricKind, BaseBidMetric],
    robots: Sequence[Robot],
    tasks: Mapping[int, Task],
    context: Optional[AuctionContext] = None,
    rho: float = 1.0,
    k: int = 0,
) -> Tuple[Schedule, EventLogEntry]:
    """Full re-auction of every unstarted task among the active robots."""
    return _reschedule(
        "cold",
        schedule,
        fleet_state,
        decision,
        metric,
        robots,
        tasks,
        context,
        rho,
        k,
        False,
    )
