from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Union

from typing_extensions import override

from ..bids import AuctionContext
from ..domain import Point, Robot, Schedule, Task, distance, robot_index
from .base_allocator import (
    BaseAllocator,
    build_schedule,
    check_allocation_input,
    start_positions_for,
)


class NearestTaskRule(str, Enum):
    """Which robot picks next.

    ``dispatch`` hands the next task to the robot that frees up first, the
    way an operational dispatcher serves idle robots. ``global_pair`` takes
    the closest (robot, task) pair over the whole fleet.
    """

    DISPATCH = "dispatch"
    GLOBAL_PAIR = "global_pair"


def nearest_task_allocate(
    robots: Sequence[Robot],
    tasks: Sequence[Task],
    context: Optional[AuctionContext] = None,
    start_positions: Optional[Mapping[int, Point]] = None,
    rule: Union[str, NearestTaskRule] = NearestTaskRule.DISPATCH,
) -> Schedule:
    """Nearest-task greedy.

    Each step gives a robot the unassigned task whose pickup is closest, in
    Euclidean distance, to the end of the robot's sequence, and moves that
    end to the task's dropoff.

    Under ``dispatch`` the robot is the one with the earliest estimated free
    time, every robot starting free at 0 and staying busy for its deadhead
    and loaded distance at the planned average speed. Under ``global_pair``
    the (robot, task) pair with the smallest distance is chosen. Ties go to
    the lower task id, then the lower robot id.
    """
    rule = NearestTaskRule(rule)
    check_allocation_input(robots, tasks)
    context = context or AuctionContext()
    fleet = robot_index(robots)
    ends = start_positions_for(robots, start_positions)
    free_at = {i: 0.0 for i in fleet}
    unassigned = sorted(tasks, key=lambda t: t.id)
    sequences: Dict[int, List[Task]] = {i: [] for i in fleet}
    while unassigned:
        if rule == NearestTaskRule.GLOBAL_PAIR:
            candidates = list(fleet)
        else:
            first = min(free_at.values())
            candidates = [min(i for i in fleet if free_at[i] == first)]
        deadhead, task_id, robot = min(
            (distance(ends[i], t.pickup), t.id, i)
            for t in unassigned
            for i in candidates
        )
        task = next(t for t in unassigned if t.id == task_id)
        sequences[robot].append(task)
        ends[robot] = task.dropoff
        v_avg = context.options.v_avg(fleet[robot].params)
        free_at[robot] += (deadhead + task.loaded_length) / v_avg
        unassigned.remove(task)
    return build_schedule(robots, sequences, context, start_positions)


class NearestTask(BaseAllocator):
    """B1: nearest-task greedy allocation; trajectories are optimised
    downstream like every other allocator's.

    Parameters
    ----------
    rule :
        ``dispatch`` (default) or ``global_pair``, see
        :class:`NearestTaskRule`.
    """

    def __init__(
        self, rule: Union[str, NearestTaskRule] = NearestTaskRule.DISPATCH
    ) -> None:
        self.rule = NearestTaskRule(rule)

    @override
    def allocate(
        self,
        robots: Sequence[Robot],
        tasks: Sequence[Task],
        context: AuctionContext,
        start_positions: Optional[Mapping[int, Point]] = None,
    ) -> Schedule:
        return nearest_task_allocate(
            robots, tasks, context, start_positions, self.rule
        )

    @override
    def name(self) -> str:
        if self.rule == NearestTaskRule.DISPATCH:
            return "nearest_task"
        return "nearest_task[{}]".format(self.rule.value)
