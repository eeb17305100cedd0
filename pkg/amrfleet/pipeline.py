"""End-to-end fleet pipeline: allocate, plan routes, refine conflicts and
simulate the disruption stream."""
import math
import time
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Union

from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted
from typing_extensions import Self

from .allocators import (
    BaseAllocator,
    SequentialAuction,
    allocators,
    const_velocity_route,
)
from .bids import AuctionContext, BaseBidMetric
from .callbacks import SimulationCallback
from .collision import (
    DEFAULT_D_SAFE,
    ConflictWindow,
    RefinementResult,
    detect_conflicts,
    min_separation,
    refine,
)
from .domain import CostWeights, Robot, Schedule, task_index
from .rescheduler import DisruptionEvent, EventLog, TriggerConfig
from .scenario import Scenario
from .simulation import FleetSimulator, SimulationResult
from .trajectory import RouteTrajectory, TrajectoryOptions, optimize_route
from .utils import n_jobs_from_env


class ExecutionModel(str, Enum):
    """How a schedule is turned into motion.

    ``ocp`` optimises every phase; ``const_velocity`` drives straight legs
    at near-constant speed with on-the-spot turns.
    """

    OCP = "ocp"
    CONST_VELOCITY = "const_velocity"


@dataclass
class PipelineTimings:
    auction_s: float = 0.0
    ocp_s: float = 0.0
    refine_s: float = 0.0
    simulate_s: float = 0.0

    @property
    def total_s(self) -> float:
        return self.auction_s + self.ocp_s + self.refine_s + self.simulate_s

    def to_dict(self) -> Dict[str, float]:
        return {**asdict(self), "total_s": self.total_s}


class PipelineResult(NamedTuple):
    schedule: Schedule
    routes: Dict[int, RouteTrajectory]
    event_log: EventLog
    report: Dict[str, Any]


def _plan(
    robot: Robot,
    scenario: Scenario,
    sequence: Sequence[Any],
    context: AuctionContext,
    execution: ExecutionModel,
) -> RouteTrajectory:
    if execution == ExecutionModel.CONST_VELOCITY:
        return const_velocity_route(
            robot,
            sequence,
            context.friction,
            context.weights,
            context.options,
            scenario.return_to_depot,
        )
    return optimize_route(
        robot.depot,
        sequence,
        robot.params,
        robot.battery,
        context.friction,
        context.weights,
        context.options,
        scenario.workspace,
        start_state=robot.initial_state(),
        return_to_depot=scenario.return_to_depot,
        robot_id=robot.id,
    )


class FleetPipeline(BaseEstimator):
    """Hierarchical fleet planner.

    The allocator partitions tasks, every robot's sequence is turned into an
    energy-optimised trajectory, proximity conflicts are resolved by slowing
    phases down, and the plan is executed against the scenario's disruption
    stream with event-triggered rescheduling.

    Parameters
    ----------
    allocator :
        Name in :data:`amrfleet.allocators.allocators` or an allocator
        instance. ``auction`` bids with ``metric``.
    metric :
        Bid metric of the auction and of every reschedule.
    execution :
        ``ocp`` or ``const_velocity``, see :class:`ExecutionModel`.
    weights :
        Objective weights, collision penalty weight and pending-task weight.
    options :
        Trajectory resolution and optimiser budget.
    refine :
        Resolve proximity conflicts after planning.
    d_safe :
        Safety distance of the proximity penalty in metres.
    simulate :
        Execute the plan against the disruption stream.
    mode :
        ``warm`` or ``cold`` rescheduling.
    prediction :
        Energy prediction mode of the deviation trigger.
    trigger :
        Trigger thresholds.
    oracle_max_pairs :
        Size guard of the trajectory-oracle bid.
    max_time :
        Hard stop of the simulated clock in seconds.
    n_jobs :
        Workers for per-robot route planning; defaults to ``AMRFLEET_N_JOBS``.
    callbacks :
        Simulation callbacks.
    verbose :
        0 silent, 1 one line per stage and reschedule.

    Attributes
    ----------
    schedule_ :
        Allocation before execution.
    trace_ :
        Auction trace, None for non-auction allocators.
    routes_ :
        Planned routes after refinement, by robot id.
    refinement_ :
        Outcome of conflict refinement, None when skipped.
    simulation_ :
        Simulation outcome, None when ``simulate`` is False.
    event_log_ :
        Reschedules during execution.
    fleet_energy_ :
        Measured fleet energy in joules.
    timings_ :
        Wall-clock time per stage.
    is_fitted_ :
        True once ``fit`` has run.

    Examples
    --------
    >>> from amrfleet.scenario import ScenarioSpec, generate_scenario
    >>> scenario = generate_scenario(ScenarioSpec(n_robots=2, n_tasks=4))
    >>> pipeline = FleetPipeline(metric="zoned").fit(scenario)
    >>> pipeline.fleet_energy_ > 0
    True
    """

    def __init__(
        self,
        allocator: Union[str, BaseAllocator] = "auction",
        metric: Union[str, BaseBidMetric] = "energy",
        execution: str = "ocp",
        weights: CostWeights = CostWeights(),
        options: Optional[TrajectoryOptions] = None,
        refine: bool = True,
        d_safe: float = DEFAULT_D_SAFE,
        simulate: bool = True,
        mode: str = "warm",
        prediction: str = "plan",
        trigger: TriggerConfig = TriggerConfig(),
        oracle_max_pairs: int = 400,
        max_time: float = 3600.0,
        n_jobs: Optional[int] = None,
        callbacks: Sequence[SimulationCallback] = (),
        verbose: int = 0,
    ) -> None:
        self.allocator = allocator
        self.metric = metric
        self.execution = execution
        self.weights = weights
        self.options = options
        self.refine = refine
        self.d_safe = d_safe
        self.simulate = simulate
        self.mode = mode
        self.prediction = prediction
        self.trigger = trigger
        self.oracle_max_pairs = oracle_max_pairs
        self.max_time = max_time
        self.n_jobs = n_jobs
        self.callbacks = callbacks
        self.verbose = verbose

    def _allocator_instance(self) -> BaseAllocator:
        if isinstance(self.allocator, BaseAllocator):
            return self.allocator
        if self.allocator == "auction":
            return SequentialAuction(metric=self.metric)
        if self.allocator not in allocators:
            raise ValueError(
                "Unknown allocator {!r}, expected one of {}".format(
                    self.allocator, sorted(allocators)
                )
            )
        return allocators[self.allocator].create()

    def context_for(self, scenario: Scenario) -> AuctionContext:
        return scenario.context(
            weights=self.weights,
            options=self.options or TrajectoryOptions(),
            oracle_max_pairs=self.oracle_max_pairs,
        )

    def _stage(self, name: str, start: float) -> float:
        elapsed = time.perf_counter() - start
        if self.verbose:
            print("[{}] {:.3f} s".format(name, elapsed))
        return elapsed

    def fit(
        self, scenario: Scenario, events: Optional[Sequence[DisruptionEvent]] = None
    ) -> Self:
        """Plan and execute ``scenario``.

        Parameters
        ----------
        scenario :
            Workspace, fleet, tasks, friction and disruption stream.
        events :
            Disruption stream overriding ``scenario.events``.

        Returns
        -------
        self :
            Returns self.

        Raises
        ------
        InfeasibleWaypointError, BatteryDepletionError, RescheduleInfeasibleError
            Propagated from planning and execution.
        """
        execution = ExecutionModel(self.execution)
        context = self.context_for(scenario)
        robots = list(scenario.robots)
        tasks = task_index(scenario.tasks)
        self.timings_ = PipelineTimings()

        start = time.perf_counter()
        allocator = self._allocator_instance()
        self.schedule_ = allocator.allocate(robots, list(scenario.tasks), context)
        self.trace_ = getattr(allocator, "trace_", None)
        self.timings_.auction_s = self._stage("allocate", start)

        start = time.perf_counter()
        planned: List[RouteTrajectory] = Parallel(n_jobs=n_jobs_from_env(self.n_jobs))(
            delayed(_plan)(
                robot,
                scenario,
                [tasks[t] for t in self.schedule_.sequences[robot.id]],
                context,
                execution,
            )
            for robot in robots
        )
        self.timings_.ocp_s = self._stage("plan", start)

        start = time.perf_counter()
        self.refinement_: Optional[RefinementResult] = None
        self.conflicts_: List[ConflictWindow] = []
        if self.refine and len(planned) > 1 and self.weights.lambda_c > 0.0:
            dt = context.options.dt
            self.conflicts_ = detect_conflicts(planned, self.d_safe, dt)
            self.refinement_ = refine(
                planned,
                self.conflicts_,
                self.weights.lambda_c,
                self.d_safe,
                dt,
                verbose=self.verbose,
            )
            planned = list(self.refinement_.trajectories)
        self.routes_ = {r.robot_id: r for r in planned}
        self.timings_.refine_s = self._stage("refine", start)

        start = time.perf_counter()
        self.simulation_: Optional[SimulationResult] = None
        if self.simulate:
            simulator = FleetSimulator(
                robots,
                list(scenario.tasks),
                self.schedule_,
                self.routes_,
                context,
                self.metric,
                self.trigger,
                self.mode,
                self.prediction,
                self.weights.rho,
                scenario.return_to_depot,
                self.max_time,
                self.callbacks,
                self.verbose,
            )
            self.simulation_ = simulator.run(
                scenario.events if events is None else events
            )
            self.event_log_ = self.simulation_.event_log
            self.fleet_energy_ = self.simulation_.fleet_energy
        else:
            self.event_log_ = EventLog()
            self.fleet_energy_ = math.fsum(r.total_energy for r in planned)
        self.timings_.simulate_s = self._stage("simulate", start)
        self.is_fitted_ = True
        return self

    def report(self) -> Dict[str, Any]:
        """Per-run metrics fragment. Wall-clock values are kept out so that
        the fragment is reproducible."""
        check_is_fitted(self, "is_fitted_")
        routes = list(self.routes_.values())
        sim = self.simulation_
        served = sim.served if sim is not None else sorted(self.schedule_.task_ids())
        unserved = sim.unserved if sim is not None else []
        refinement = self.refinement_
        return {
            "allocator": str(self._allocator_instance()),
            "execution": ExecutionModel(self.execution).value,
            "fleet_energy": self.fleet_energy_,
            "planned_energy": math.fsum(r.total_energy for r in routes),
            "predicted_energy": self.schedule_.total_predicted_energy,
            "served": len(served),
            "unserved": len(unserved),
            "makespan": (
                sim.makespan if sim is not None else max(r.t_end for r in routes)
            ),
            "reschedules": len(self.event_log_),
            "faulted": len(sim.faulted) if sim is not None else 0,
            "conflicts_before": len(self.conflicts_),
            "penalty_before": 0.0 if refinement is None else refinement.penalty_before,
            "penalty_after": 0.0 if refinement is None else refinement.penalty_after,
            "residual_conflicts": 0 if refinement is None else len(refinement.residual),
            "min_separation": min_separation(routes, routes[0].context.options.dt),
        }


def run_pipeline(
    scenario: Scenario,
    metric: Union[str, BaseBidMetric] = "energy",
    options: Optional[TrajectoryOptions] = None,
    events: Optional[Sequence[DisruptionEvent]] = None,
    **kwargs: Any,
) -> PipelineResult:
    """Functional form of :class:`FleetPipeline`.

    Returns
    -------
    PipelineResult
        Schedule after execution, final routes, event log and the metrics
        fragment.
    """
    pipeline = FleetPipeline(metric=metric, options=options, **kwargs).fit(
        scenario, events
    )
    sim = pipeline.simulation_
    schedule = sim.schedule if sim is not None else pipeline.schedule_
    routes = sim.routes if sim is not None else pipeline.routes_
    return PipelineResult(schedule, routes, pipeline.event_log_, pipeline.report())
