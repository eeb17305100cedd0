"""Exhaustive assignment enumeration for small instances.

Every one of the ``n ** m`` task-to-robot mappings is priced with a fixed
ordering rule inside each robot. Per-robot costs depend only on the subset of
tasks a robot receives, so they are tabulated once per subset (bitmask) and
the enumeration itself only adds table entries.
"""
import itertools
import math
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from typing_extensions import override

from ..bids import AuctionContext, RobotPairCost, metric_oracle
from ..domain import Point, Robot, Schedule, Task, robot_index, task_index
from ..exceptions import SizeGuardError
from ..utils import n_jobs_from_env
from .base_allocator import (
    BaseAllocator,
    build_schedule,
    check_allocation_input,
    start_positions_for,
)


class TaskOrdering(str, Enum):
    """Order in which a robot executes the tasks it is given.

    ``ascending`` runs them by task id. ``optimal`` picks the cheapest open
    path through them by dynamic programming over subsets.
    """

    ASCENDING = "ascending"
    OPTIMAL = "optimal"


class SubsetTable:
    """Cost and execution order of every task subset for one robot.

    ``tasks`` must be sorted by id; bit ``b`` of a mask stands for
    ``tasks[b]``.
    """

    def __init__(
        self,
        robot: Robot,
        start: Point,
        tasks: Sequence[Task],
        cost_oracle: RobotPairCost,
        ordering: Union[str, TaskOrdering] = TaskOrdering.ASCENDING,
    ) -> None:
        self.robot = robot
        self.tasks = list(tasks)
        self.ordering = TaskOrdering(ordering)
        m = len(self.tasks)
        # row 0 prices from the start, row b + 1 from the dropoff of task b
        pair = np.empty((m + 1, m))
        origins = [start] + [t.dropoff for t in self.tasks]
        for a, origin in enumerate(origins):
            for b, task in enumerate(self.tasks):
                pair[a, b] = 0.0 if a == b + 1 else cost_oracle(robot, origin, task)
        self.pair = pair
        if self.ordering == TaskOrdering.ASCENDING:
            self.cost, self.order = self._ascending(m)
        else:
            self.cost, self.order = self._held_karp(m)

    def _ascending(self, m: int) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
        cost = np.zeros(1 << m)
        order: List[Tuple[int, ...]] = [()] * (1 << m)
        for mask in range(1, 1 << m):
            last = mask.bit_length() - 1
            rest = mask & ~(1 << last)
            prev = order[rest][-1] + 1 if rest else 0
            cost[mask] = cost[rest] + self.pair[prev, last]
            order[mask] = order[rest] + (last,)
        return cost, order

    def _held_karp(self, m: int) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
        size = 1 << m
        best = np.full((size, max(m, 1)), math.inf)
        parent = np.full((size, max(m, 1)), -1, dtype=np.int64)
        for b in range(m):
            best[1 << b, b] = self.pair[0, b]
        for mask in range(1, size):
            for last in range(m):
                if not mask >> last & 1 or best[mask, last] == math.inf:
                    continue
                for nxt in range(m):
                    if mask >> nxt & 1:
                        continue
                    value = best[mask, last] + self.pair[last + 1, nxt]
                    grown = mask | 1 << nxt
                    # strict < keeps the lowest predecessor on ties
                    if value < best[grown, nxt]:
                        best[grown, nxt] = value
                        parent[grown, nxt] = last
        cost = np.zeros(size)
        order: List[Tuple[int, ...]] = [()] * size
        for mask in range(1, size):
            last = int(np.argmin(best[mask, :m]))
            cost[mask] = best[mask, last]
            seq: List[int] = []
            rest, node = mask, last
            while node >= 0:
                seq.append(node)
                rest, node = rest & ~(1 << node), int(parent[rest, node])
            order[mask] = tuple(reversed(seq))
        return cost, order

    def sequence(self, mask: int) -> List[Task]:
        return [self.tasks[b] for b in self.order[mask]]


def _block_best(
    first: int, n: int, m: int, tables: Sequence[np.ndarray]
) -> Tuple[float, Tuple[int, ...]]:
    best: Tuple[float, Tuple[int, ...]] = (math.inf, ())
    for tail in itertools.product(range(n), repeat=m - 1):
        assignment = (first,) + tail
        masks = [0] * n
        for b, r in enumerate(assignment):
            masks[r] |= 1 << b
        value = math.fsum(tables[r][masks[r]] for r in range(n))
        if (value, assignment) < best:
            best = (value, assignment)
    return best


def enumerate_optimal(
    robots: Sequence[Robot],
    tasks: Sequence[Task],
    cost_oracle: RobotPairCost,
    ordering: Union[str, TaskOrdering] = TaskOrdering.ASCENDING,
    max_robots: int = 3,
    max_tasks: int = 8,
    n_jobs: Optional[int] = None,
    start_positions: Optional[Mapping[int, Point]] = None,
) -> Tuple[Schedule, float]:
    """Minimum-cost assignment over all ``n ** m`` mappings.

    Parameters
    ----------
    robots :
        Fleet, at most ``max_robots``.
    tasks :
        Tasks, at most ``max_tasks``.
    cost_oracle :
        Cost of a robot executing a task from a position.
    ordering :
        Execution order inside each robot.
    n_jobs :
        Worker budget; defaults to ``AMRFLEET_N_JOBS``.

    Returns
    -------
    Tuple[Schedule, float]
        The optimal schedule (per-robot oracle costs as predicted energy)
        and its cost. Ties resolve to the lexicographically smallest
        assignment of robot indices to ascending task ids.
    """
    check_allocation_input(robots, tasks)
    n, m = len(robots), len(tasks)
    if n > max_robots or m > max_tasks:
        raise SizeGuardError(
            "Enumeration is limited to n <= {} and m <= {}, got n={}, m={}".format(
                max_robots, max_tasks, n, m
            )
        )
    fleet = list(robot_index(robots).values())
    starts = start_positions_for(robots, start_positions)
    ordered = sorted(tasks, key=lambda t: t.id)
    if m == 0:
        return Schedule.empty(r.id for r in fleet), 0.0
    n_jobs = n_jobs_from_env(n_jobs)
    tables: List[SubsetTable] = Parallel(n_jobs=n_jobs)(
        delayed(SubsetTable)(r, starts[r.id], ordered, cost_oracle, ordering)
        for r in fleet
    )
    costs = [table.cost for table in tables]
    blocks = Parallel(n_jobs=n_jobs)(
        delayed(_block_best)(first, n, m, costs) for first in range(n)
    )
    value, assignment = min(blocks)
    sequences: Dict[int, Tuple[int, ...]] = {}
    energy: Dict[int, float] = {}
    for r, (robot, table) in enumerate(zip(fleet, tables)):
        mask = sum(1 << b for b, owner in enumerate(assignment) if owner == r)
        sequences[robot.id] = tuple(t.id for t in table.sequence(mask))
        energy[robot.id] = float(table.cost[mask])
    return Schedule(sequences, energy), float(value)


def fixed_order_cost(
    schedule: Schedule,
    robots: Sequence[Robot],
    tasks: Sequence[Task],
    cost_oracle: RobotPairCost,
    ordering: Union[str, TaskOrdering] = TaskOrdering.ASCENDING,
    start_positions: Optional[Mapping[int, Point]] = None,
) -> float:
    """Cost of a schedule's assignment, re-sequenced by ``ordering``.

    Only which robot holds which task matters, so any allocator's schedule
    can be compared against :func:`enumerate_optimal` under one rule. The
    ``optimal`` rule tabulates subsets and is limited to 16 tasks per robot.
    """
    ordering = TaskOrdering(ordering)
    fleet = robot_index(robots)
    by_id = task_index(tasks)
    starts = start_positions_for(robots, start_positions)
    total = []
    for robot_id, seq in schedule.sequences.items():
        if not seq:
            continue
        robot = fleet[robot_id]
        own = sorted((by_id[t] for t in seq), key=lambda t: t.id)
        if ordering == TaskOrdering.ASCENDING:
            cost, position = 0.0, starts[robot_id]
            for task in own:
                cost += cost_oracle(robot, position, task)
                position = task.dropoff
            total.append(cost)
            continue
        if len(own) > 16:
            raise SizeGuardError(
                "Optimal ordering handles at most 16 tasks, robot {} has {}".format(
                    robot_id, len(own)
                )
            )
        table = SubsetTable(robot, starts[robot_id], own, cost_oracle, ordering)
        total.append(float(table.cost[-1]))
    return math.fsum(total)


class Enumeration(BaseAllocator):
    """B4: exact assignment under the zone-aware closed-form energy.

    Attributes
    ----------
    cost_ :
        Optimal cost of the most recent allocation.
    """

    def __init__(
        self,
        ordering: str = "ascending",
        max_robots: int = 3,
        max_tasks: int = 8,
        n_jobs: Optional[int] = None,
    ) -> None:
        self.ordering = ordering
        self.max_robots = max_robots
        self.max_tasks = max_tasks
        self.n_jobs = n_jobs

    @override
    def allocate(
        self,
        robots: Sequence[Robot],
        tasks: Sequence[Task],
        context: AuctionContext,
        start_positions: Optional[Mapping[int, Point]] = None,
    ) -> Schedule:
        schedule, self.cost_ = enumerate_optimal(
            robots,
            tasks,
            metric_oracle("zoned", context),
            self.ordering,
            self.max_robots,
            self.max_tasks,
            self.n_jobs,
            start_positions,
        )
        by_id = task_index(tasks)
        sequences = {
            i: [by_id[t] for t in seq] for i, seq in schedule.sequences.items()
        }
        return build_schedule(robots, sequences, context, start_positions)

    @override
    def name(self) -> str:
        return "enumeration"
