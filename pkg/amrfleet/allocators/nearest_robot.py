import math
from dataclasses import replace
from typing import Dict, List, Mapping, Optional, Sequence, Union

from typing_extensions import override

from ..bids import AuctionContext
from ..domain import (
    CostWeights,
    PhaseKind,
    Point,
    Robot,
    Schedule,
    Task,
    distance,
    robot_index,
    task_index,
    waypoint_list,
)
from ..dubins import straight_path
from ..energy import FrictionField
from ..input_validation import check_fraction
from ..trajectory import (
    PlanContext,
    RouteTrajectory,
    SegmentPlan,
    TrajectoryOptions,
    plan_phase,
)
from .base_allocator import (
    BaseAllocator,
    build_schedule,
    check_allocation_input,
    start_positions_for,
)

CONST_VELOCITY_RAMP_SHARE = 0.05


def nearest_robot_allocate(
    robots: Sequence[Robot],
    tasks: Sequence[Task],
    context: Optional[AuctionContext] = None,
    start_positions: Optional[Mapping[int, Point]] = None,
) -> Schedule:
    """Tasks in arrival order, each to the robot whose sequence currently ends
    closest to its pickup (lower robot id on ties)."""
    check_allocation_input(robots, tasks)
    context = context or AuctionContext()
    fleet = robot_index(robots)
    ends = start_positions_for(robots, start_positions)
    sequences: Dict[int, List[Task]] = {i: [] for i in fleet}
    for task in sorted(tasks, key=lambda t: (t.arrival_time, t.id)):
        _, robot = min((distance(ends[i], task.pickup), i) for i in fleet)
        sequences[robot].append(task)
        ends[robot] = task.dropoff
    return build_schedule(robots, sequences, context, start_positions)


def const_velocity_route(
    robot: Robot,
    sequence: Sequence[Task],
    field: Union[FrictionField, float] = FrictionField(),
    weights: CostWeights = CostWeights(),
    options: Optional[TrajectoryOptions] = None,
    return_to_depot: bool = True,
    ramp_share: float = CONST_VELOCITY_RAMP_SHARE,
) -> RouteTrajectory:
    """Straight legs at near-constant cruise speed.

    The robot stops at every waypoint and turns on the spot, for free, to face
    the next one. Each leg spends ``ramp_share`` of its duration on each
    speed ramp and cruises in between at the speed the timing law implies.
    """
    ramp_share = check_fraction(ramp_share, "ramp_share", low_open=True)
    if not isinstance(field, FrictionField):
        field = FrictionField.uniform(field)
    context = PlanContext(
        robot.params, robot.battery, field, weights, options or TrajectoryOptions()
    )
    start = robot.initial_state()
    state, t = start, 0.0
    segments: List[SegmentPlan] = []
    for k, w in enumerate(waypoint_list(robot.depot, sequence, return_to_depot)[1:]):
        path = straight_path(state.position, w.point)
        heading = path.start[2] if path.length > 0.0 else state.heading
        payload = 0.0
        if w.kind == PhaseKind.LOADED:
            payload = next(task.payload for task in sequence if task.id == w.task_id)
        seg = plan_phase(
            replace(state, heading=heading, speed=0.0),
            (w.point[0], w.point[1], heading),
            context,
            kind=w.kind,
            task_id=w.task_id,
            payload=payload,
            index=k,
            t_start=t,
            path=path,
            shares=(ramp_share, ramp_share),
        )
        segments.append(seg)
        state, t = seg.end_state, seg.t_end
    return RouteTrajectory(robot.id, start, 0.0, segments, context, robot.depot)


def const_velocity_energy(
    schedule: Schedule,
    robots: Sequence[Robot],
    tasks: Sequence[Task],
    field: Union[FrictionField, float] = FrictionField(),
    weights: CostWeights = CostWeights(),
    options: Optional[TrajectoryOptions] = None,
    return_to_depot: bool = True,
    ramp_share: float = CONST_VELOCITY_RAMP_SHARE,
) -> float:
    """Fleet energy in joules of ``schedule`` flown as constant-velocity
    straight legs through the physics model."""
    fleet = robot_index(robots)
    by_id = task_index(tasks)
    total = []
    for robot_id, seq in schedule.sequences.items():
        if not seq:
            continue
        route = const_velocity_route(
            fleet[robot_id],
            [by_id[t] for t in seq],
            field,
            weights,
            options,
            return_to_depot,
            ramp_share,
        )
        total.append(route.total_energy)
    return math.fsum(total)


class NearestRobot(BaseAllocator):
    """B2 allocation rule; pair it with :func:`const_velocity_energy` for the
    constant-velocity execution model."""

    @override
    def allocate(
        self,
        robots: Sequence[Robot],
        tasks: Sequence[Task],
        context: AuctionContext,
        start_positions: Optional[Mapping[int, Point]] = None,
    ) -> Schedule:
        return nearest_robot_allocate(robots, tasks, context, start_positions)

    @override
    def name(self) -> str:
        return "nearest_robot"
