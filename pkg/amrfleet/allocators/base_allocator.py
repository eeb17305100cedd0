from abc import ABC, abstractmethod
from typing import Any, Dict, Mapping, Optional, Sequence

from typing_extensions import Self

from ..bids import AuctionContext
from ..domain import Point, Robot, Schedule, Task, robot_index, task_index
from ..energy import route_energy_closed_form
from ..input_validation import check_point


class BaseAllocator(ABC):
    """Base class for task allocators.

    An allocator partitions tasks into one ordered sequence per robot. Robots
    start from their depots unless ``start_positions`` overrides them, which
    is how rescheduling continues from the fleet's current state.
    """

    @abstractmethod
    def allocate(
        self,
        robots: Sequence[Robot],
        tasks: Sequence[Task],
        context: AuctionContext,
        start_positions: Optional[Mapping[int, Point]] = None,
    ) -> Schedule:
        """Assign every task to exactly one robot.

        Parameters
        ----------
        robots :
            The bidding fleet.
        tasks :
            Tasks to assign.
        context :
            Friction field, weights and options shared by all robots.
        start_positions :
            Position each robot's sequence starts from, by robot id.

        Returns
        -------
        Schedule
            Sequences with closed-form predicted energy per robot.
        """
        pass

    @abstractmethod
    def name(self) -> str:
        pass

    @classmethod
    def create(cls, **kwargs: Any) -> Self:
        return cls(**kwargs)

    def __str__(self) -> str:
        return self.name()


def start_positions_for(
    robots: Sequence[Robot], start_positions: Optional[Mapping[int, Point]] = None
) -> Dict[int, Point]:
    start_positions = start_positions or {}
    fleet = robot_index(robots)
    unknown = set(start_positions) - set(fleet)
    if unknown:
        raise ValueError(
            "start_positions names unknown robots {}".format(sorted(unknown))
        )
    return {
        i: check_point(start_positions.get(i, r.depot), "start position")
        for i, r in fleet.items()
    }


def check_allocation_input(robots: Sequence[Robot], tasks: Sequence[Task]) -> None:
    robot_index(robots)
    task_index(tasks)
    if tasks and not robots:
        raise ValueError(
            "Cannot allocate {} tasks to an empty fleet".format(len(tasks))
        )
    if tasks:
        capacity = max(r.params.w_max for r in robots)
        heavy = sorted(t.id for t in tasks if t.payload > capacity)
        if heavy:
            raise ValueError(
                "Tasks {} exceed the largest w_max in the fleet ({} kg)".format(
                    heavy, capacity
                )
            )


def build_schedule(
    robots: Sequence[Robot],
    sequences: Mapping[int, Sequence[Task]],
    context: AuctionContext,
    start_positions: Optional[Mapping[int, Point]] = None,
) -> Schedule:
    """Schedule from task sequences, priced with the closed-form route energy
    from each robot's start position."""
    starts = start_positions_for(robots, start_positions)
    fleet = robot_index(robots)
    energy = {
        i: route_energy_closed_form(
            starts[i], sequences.get(i, ()), r.params, context.friction, context.regen
        )
        for i, r in fleet.items()
    }
    return Schedule(
        {i: tuple(t.id for t in sequences.get(i, ())) for i in fleet}, energy
    )
