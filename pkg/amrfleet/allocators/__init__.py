from enum import Enum
from typing import Dict, Type

from .auction import (
    AuctionRound,
    AuctionTrace,
    Bid,
    SequentialAuction,
    ranking_accuracy,
    run_auction,
    select_winner,
    suboptimality_bound,
    suboptimality_bound_check,
)
from .base_allocator import BaseAllocator, build_schedule
from .enumeration import (
    Enumeration,
    SubsetTable,
    TaskOrdering,
    enumerate_optimal,
    fixed_order_cost,
)
from .nearest_robot import (
    NearestRobot,
    const_velocity_energy,
    const_velocity_route,
    nearest_robot_allocate,
)
from .nearest_task import NearestTask, NearestTaskRule, nearest_task_allocate


class BaselineKind(str, Enum):
    B1_NEAREST_TASK_OCP = "B1_nearest_task_ocp"
    B2_NEAREST_ROBOT_CONST_VEL = "B2_nearest_robot_const_vel"
    B3_DISTANCE_AUCTION = "B3_distance_auction"
    B4_ENUMERATION = "B4_enumeration"


allocators: Dict[str, Type[BaseAllocator]] = {
    "auction": SequentialAuction,
    "nearest_task": NearestTask,
    "nearest_robot": NearestRobot,
    "enumeration": Enumeration,
}


def baseline_allocator(kind: BaselineKind) -> BaseAllocator:
    """Allocator that produces a baseline's schedule."""
    kind = BaselineKind(kind)
    if kind == BaselineKind.B1_NEAREST_TASK_OCP:
        return NearestTask()
    if kind == BaselineKind.B2_NEAREST_ROBOT_CONST_VEL:
        return NearestRobot()
    if kind == BaselineKind.B3_DISTANCE_AUCTION:
        return SequentialAuction(metric="distance")
    return Enumeration()


__all__ = [
    "AuctionRound",
    "AuctionTrace",
    "BaseAllocator",
    "BaselineKind",
    "Bid",
    "Enumeration",
    "NearestRobot",
    "NearestTask",
    "NearestTaskRule",
    "SequentialAuction",
    "SubsetTable",
    "TaskOrdering",
    "allocators",
    "baseline_allocator",
    "build_schedule",
    "const_velocity_energy",
    "const_velocity_route",
    "enumerate_optimal",
    "fixed_order_cost",
    "nearest_robot_allocate",
    "nearest_task_allocate",
    "ranking_accuracy",
    "run_auction",
    "select_winner",
    "suboptimality_bound",
    "suboptimality_bound_check",
]
