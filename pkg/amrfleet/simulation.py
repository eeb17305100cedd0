"""Discrete-event execution of fleet routes with disruptions.

Routes are realized trajectories on a common clock, so executing them means
reading them at the current time. Two simpy processes drive the run: one
delivers the disruption stream at its event times and one monitors the fleet
every ``check_interval`` seconds. Either may fire a reschedule, after which
changed route suffixes are re-planned from the end of each robot's committed
prefix.
"""
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Dict,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import numpy as np
import pandas as pd
import simpy

from .bids import AuctionContext, BaseBidMetric, BidMetricKind
from .callbacks import SimulationCallback
from .domain import PhaseKind, Robot, Schedule, Task, robot_index, task_index
from .energy import SegmentSpec, segment_energy_in_field
from .rescheduler import (
    CostToGo,
    DisruptionEvent,
    DisruptionKind,
    EventLog,
    FleetState,
    RobotStatus,
    TriggerConfig,
    TriggerDecision,
    cold_reschedule,
    evaluate_triggers,
    track_cost_to_go,
    warm_start_reschedule,
)
from .trajectory import RouteTrajectory, extend_route


class PredictionMode(str, Enum):
    """How the predicted energy of a robot is formed while it executes.

    ``plan`` predicts the planned physics energy; ``closed_form`` prorates
    the closed-form energy of each phase linearly in time.
    """

    PLAN = "plan"
    CLOSED_FORM = "closed_form"


class RescheduleMode(str, Enum):
    WARM = "warm"
    COLD = "cold"


@dataclass
class SimulationResult:
    """Outcome of a simulated run.

    Attributes:
        schedule: Final schedule.
        routes: Final route of every robot, halted at its fault if any.
        event_log: One entry per reschedule.
        robot_energy: Measured energy per robot in joules.
        fleet_energy: Sum of ``robot_energy``.
        served: Tasks whose dropoff was reached.
        unserved: Every other known task.
        makespan: Time the last robot stopped.
        cost_to_go: Cost-to-go at every checkpoint and reschedule.
        faulted: Robots lost to faults.
        energy_series: Fleet energy over time, one row per checkpoint.
    """

    schedule: Schedule
    routes: Dict[int, RouteTrajectory]
    event_log: EventLog
    robot_energy: Dict[int, float]
    fleet_energy: float
    served: List[int]
    unserved: List[int]
    makespan: float
    cost_to_go: List[CostToGo] = field(default_factory=list)
    faulted: List[int] = field(default_factory=list)
    energy_series: pd.DataFrame = field(default_factory=pd.DataFrame)

    def __str__(self) -> str:
        return (
            "Simulation Result:\n\tfleet_energy: {}\n\tmakespan: {}\n\tserved: {}"
            "\n\tunserved: {}\n\treschedules: {}".format(
                self.fleet_energy,
                self.makespan,
                len(self.served),
                len(self.unserved),
                len(self.event_log),
            )
        )


def _served_tasks(route: RouteTrajectory, t: float = math.inf) -> Set[int]:
    """Tasks whose loaded phase finished by ``t``."""
    if route.t_stop is not None:
        t = min(t, route.t_stop)
    return {
        s.task_id
        for s in route.segments
        if s.kind == PhaseKind.LOADED and s.task_id is not None and s.t_end <= t
    }


class FleetSimulator:
    """Execute planned routes under a disruption stream.

    Parameters
    ----------
    robots :
        The fleet.
    tasks :
        Tasks of the initial schedule.
    schedule :
        Initial schedule; its sequences must match ``routes``.
    routes :
        Planned route of every robot.
    context :
        Bidding context of reschedules.
    metric :
        Bid metric of reschedules.
    config :
        Trigger thresholds and monitoring period.
    mode :
        ``warm`` re-auctions only affected tasks, ``cold`` every unstarted
        task.
    prediction :
        Energy prediction mode, see :class:`PredictionMode`.
    rho :
        Weight of the unstarted-task count in the cost-to-go.
    return_to_depot :
        Re-planned routes end at the depot.
    max_time :
        Hard stop of the simulated clock in seconds.
    callbacks :
        Observers of the run.
    verbose :
        Print one line per reschedule when > 0.
    """

    def __init__(
        self,
        robots: Sequence[Robot],
        tasks: Sequence[Task],
        schedule: Schedule,
        routes: Mapping[int, RouteTrajectory],
        context: Optional[AuctionContext] = None,
        metric: Union[str, BidMetricKind, BaseBidMetric] = "energy",
        config: TriggerConfig = TriggerConfig(),
        mode: Union[str, RescheduleMode] = RescheduleMode.WARM,
        prediction: Union[str, PredictionMode] = PredictionMode.PLAN,
        rho: float = 1.0,
        return_to_depot: bool = True,
        max_time: float = 3600.0,
        callbacks: Sequence[SimulationCallback] = (),
        verbose: int = 0,
    ) -> None:
        self.robots = robot_index(robots)
        self.tasks = task_index(tasks)
        self.schedule = schedule
        self.context = context or AuctionContext()
        self.metric = metric
        self.config = config
        self.mode = RescheduleMode(mode)
        self.prediction = PredictionMode(prediction)
        self.rho = rho
        self.return_to_depot = return_to_depot
        self.max_time = max_time
        self.callbacks = list(callbacks)
        self.verbose = verbose
        missing = set(self.robots) - set(routes)
        if missing:
            raise ValueError("No route for robots {}".format(sorted(missing)))
        self.routes: Dict[int, RouteTrajectory] = {i: routes[i] for i in self.robots}
        self.active: Dict[int, bool] = {i: True for i in self.robots}
        self.injections: Dict[int, List[Tuple[float, float]]] = {
            i: [] for i in self.robots
        }
        self.anchors: Dict[int, Tuple[float, float]] = {}
        self.last_deviation: Dict[int, float] = {i: -math.inf for i in self.robots}
        self.event_log = EventLog()
        self.cost_to_go: List[CostToGo] = []
        self.pending = 0
        self.k = 0

    # energy bookkeeping

    def actual_energy(self, i: int, t: float) -> float:
        """Measured energy of robot ``i`` up to ``t``, injected excess
        consumption included."""
        route = self.routes[i]
        e = route.cumulative_energy_at(t)
        extra = math.fsum(
            m * max(e - route.cumulative_energy_at(t_inj), 0.0)
            for t_inj, m in self.injections[i]
            if t_inj <= t
        )
        return e + extra

    def _closed_form_energy(self, i: int, t: float) -> float:
        route, robot = self.routes[i], self.robots[i]
        total = []
        for seg in route.segments:
            if seg.t_start > t:
                break
            spec = SegmentSpec(
                seg.start_state.position,
                seg.end_state.position,
                seg.payload,
                *seg.boundary,
            )
            e = segment_energy_in_field(
                spec, robot.params, self.context.friction, self.context.regen
            )
            share = 1.0
            if seg.duration > 0.0:
                share = min((t - seg.t_start) / seg.duration, 1.0)
            total.append(e * share)
        return math.fsum(total)

    def _unanchored_prediction(self, i: int, t: float) -> float:
        if self.prediction == PredictionMode.PLAN:
            return self.routes[i].cumulative_energy_at(t)
        return self._closed_form_energy(i, t)

    def predicted_energy(self, i: int, t: float) -> float:
        """Prediction re-anchored to the measured energy at the robot's last
        deviation reschedule."""
        base = self._unanchored_prediction(i, t)
        if i not in self.anchors:
            return base
        t_a, e_a = self.anchors[i]
        return e_a + base - self._unanchored_prediction(i, t_a)

    # fleet snapshot

    def committed(self, i: int, t: float) -> Tuple[int, Optional[int]]:
        """Number of phases robot ``i`` is committed to at ``t`` and the task
        in progress. A task is committed as a whole once its transit starts."""
        segs = self.routes[i].segments
        started = [k for k, s in enumerate(segs) if s.t_start <= t]
        if not started:
            return 0, None
        k = started[-1]
        seg = segs[k]
        if seg.t_end <= t or seg.task_id is None:
            return k + 1, None
        last = max(j for j, s in enumerate(segs) if s.task_id == seg.task_id)
        return last + 1, seg.task_id

    def _status(self, i: int, t: float) -> RobotStatus:
        route = self.routes[i]
        in_progress = None
        if not self.active[i]:
            free, t_free = route.state_at(t), t
        else:
            keep, in_progress = self.committed(i, t)
            if keep:
                seg = route.segments[keep - 1]
                free, t_free = seg.end_state, max(seg.t_end, t)
            else:
                free, t_free = route.start_state, max(route.t0, t)
        return RobotStatus(
            robot=i,
            position=free.position,
            heading=free.heading,
            t_free=t_free,
            active=self.active[i],
            in_progress=in_progress,
            energy_actual=self.actual_energy(i, t),
            energy_predicted=self.predicted_energy(i, t),
            last_deviation_reschedule=self.last_deviation[i],
        )

    def fleet_state(self, t: float) -> FleetState:
        completed: Set[int] = set()
        for route in self.routes.values():
            completed |= _served_tasks(route, t)
        return FleetState(
            t, {i: self._status(i, t) for i in self.robots}, frozenset(completed)
        )

    def _with_cursors(self, t: float) -> Schedule:
        schedule = self.schedule
        for i in schedule.robot_ids:
            seq = schedule.sequences[i]
            if not self.active[i]:
                schedule = schedule.with_cursor(i, len(seq))
                continue
            keep, _ = self.committed(i, t)
            segs = self.routes[i].segments[:keep]
            started = {s.task_id for s in segs if s.task_id is not None}
            cursor = 0
            while cursor < len(seq) and seq[cursor] in started:
                cursor += 1
            schedule = schedule.with_cursor(i, cursor)
        return schedule

    def _record_cost_to_go(self, t: float) -> CostToGo:
        self.schedule = self._with_cursors(t)
        ctg = track_cost_to_go(
            self.schedule,
            self.fleet_state(t),
            self.rho,
            list(self.robots.values()),
            self.tasks,
            self.context,
            self.k,
        )
        self.cost_to_go.append(ctg)
        return ctg

    # reschedule

    def reschedule(self, t: float, decision: TriggerDecision) -> None:
        schedule = self._with_cursors(t)
        state = self.fleet_state(t)
        for task in decision.priority_tasks:
            self.tasks[task.id] = task
        if self.mode == RescheduleMode.WARM:
            new, entry = warm_start_reschedule(
                schedule,
                state,
                decision,
                self.metric,
                list(self.robots.values()),
                self.tasks,
                self.context,
                self.rho,
                self.k,
            )
        else:
            new, entry = cold_reschedule(
                schedule,
                state,
                decision,
                self.metric,
                list(self.robots.values()),
                self.tasks,
                self.context,
                self.rho,
                self.k,
            )
        for i in decision.faults:
            self.active[i] = False
            self.routes[i] = self.routes[i].halted(t)
        for i in self.robots:
            if not self.active[i]:
                continue
            before = schedule.unstarted(i) if i in schedule.sequences else ()
            after = new.unstarted(i)
            if before == after:
                continue
            keep, _ = self.committed(i, t)
            self.routes[i] = extend_route(
                self.routes[i],
                keep,
                [self.tasks[task] for task in after],
                self.return_to_depot,
                t_resume=t,
            )
        for i in decision.deviant:
            self.last_deviation[i] = t
            self.anchors[i] = (t, self.actual_energy(i, t))
        self.schedule = new
        self.event_log.append(entry)
        self.k += 1
        unstarted = sum(len(new.unstarted(i)) for i in new.robot_ids)
        self.cost_to_go.append(CostToGo(entry.v_after, unstarted, self.k))
        if self.verbose:
            print(entry)
        for callback in self.callbacks:
            callback.after_reschedule(self, entry)

    # processes

    def _horizon(self) -> float:
        ends = [r.t_end for i, r in self.routes.items() if self.active[i]]
        return max(ends, default=0.0)

    def _finished(self, t: float) -> bool:
        return t >= self.max_time or (self.pending == 0 and t >= self._horizon())

    def _disruptions(
        self, env: simpy.Environment, events: Sequence[DisruptionEvent]
    ) -> Iterator[simpy.events.Event]:
        ordered = sorted(
            events,
            key=lambda e: (
                e.t,
                e.kind.value,
                -1 if e.robot is None else e.robot,
                -1 if e.task is None else e.task.id,
            ),
        )
        for t, group in itertools.groupby(ordered, key=lambda e: e.t):
            if t > self.max_time:
                return
            yield env.timeout(t - env.now)
            batch = list(group)
            self.pending -= len(batch)
            for e in batch:
                if (
                    e.kind == DisruptionKind.ENERGY_DEVIATION
                    and e.robot is not None
                    and self.active.get(e.robot, False)
                ):
                    self.injections[e.robot].append((t, e.magnitude))
            decision = evaluate_triggers(
                self.fleet_state(t),
                None,
                [e for e in batch if e.kind != DisruptionKind.ENERGY_DEVIATION],
                self.config,
                t,
            )
            if decision.fire:
                self.reschedule(t, decision)

    def _monitor(self, env: simpy.Environment) -> Iterator[simpy.events.Event]:
        while not self._finished(env.now):
            yield env.timeout(self.config.check_interval)
            t = env.now
            decision = evaluate_triggers(self.fleet_state(t), None, (), self.config, t)
            if decision.fire:
                self.reschedule(t, decision)
            ctg = self._record_cost_to_go(t)
            for callback in self.callbacks:
                callback.on_checkpoint(self, t, ctg)

    def run(self, events: Sequence[DisruptionEvent] = ()) -> SimulationResult:
        """Run until every route is done and every event has been delivered.

        Raises
        ------
        RescheduleInfeasibleError
            Tasks were orphaned by faults with no active robot left.
        BatteryDepletionError
            A re-planned route ran out of charge.
        """
        for callback in self.callbacks:
            callback.before_simulation(self)
        self.pending = sum(1 for e in events if e.t <= self.max_time)
        env = simpy.Environment()
        self._record_cost_to_go(0.0)
        env.process(self._disruptions(env, events))
        env.run(until=env.process(self._monitor(env)))
        result = self._result()
        for callback in self.callbacks:
            callback.after_simulation(self, result)
        return result

    def _result(self) -> SimulationResult:
        makespan = max((r.t_end for r in self.routes.values()), default=0.0)
        energy = {i: self.actual_energy(i, makespan) for i in self.robots}
        served: Set[int] = set()
        for route in self.routes.values():
            served |= _served_tasks(route)
        step = self.config.check_interval
        grid = np.arange(0.0, makespan + step, step) if makespan > 0.0 else np.zeros(1)
        series = pd.DataFrame(
            {
                "t": grid,
                "fleet_energy": [
                    math.fsum(self.actual_energy(i, float(t)) for i in self.robots)
                    for t in grid
                ],
            }
        )
        return SimulationResult(
            schedule=self._with_cursors(makespan),
            routes=dict(self.routes),
            event_log=self.event_log,
            robot_energy=energy,
            fleet_energy=math.fsum(energy.values()),
            served=sorted(served),
            unserved=sorted(set(self.tasks) - served),
            makespan=makespan,
            cost_to_go=list(self.cost_to_go),
            faulted=sorted(i for i, a in self.active.items() if not a),
            energy_series=series,
        )
