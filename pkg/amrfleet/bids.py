"""Bid metrics for the sequential auction.

A bid prices executing ``task`` from the position where a robot's current
sequence ends. Metrics are selected by name through :data:`bid_metrics`.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, ClassVar, Dict, Mapping, Sequence, Type, Union

from typing_extensions import Self, TypeAlias, override

from .domain import CostWeights, Point, Robot, Task, distance
from .energy import FrictionField, bid_energy_approx, bid_energy_zoned
from .exceptions import SizeGuardError
from .input_validation import check_point, check_positive
from .trajectory import PlanContext, TrajectoryOptions, oracle_pair_cost

RobotPairCost: TypeAlias = Callable[[Robot, Point, Task], float]
"""Cost for ``robot`` standing at a position to execute a task."""


class BidMetricKind(str, Enum):
    ENERGY_CLOSED_FORM = "energy_closed_form"
    EUCLIDEAN_DISTANCE = "euclidean_distance"
    ZONE_AWARE_ENERGY = "zone_aware_energy"
    EXACT_OCP_ORACLE = "exact_ocp_oracle"


@dataclass(frozen=True)
class AuctionContext:
    """Shared information every bidder sees.

    ``bid_scale`` multiplies all bids of a robot; robots without an entry bid
    at scale 1. ``oracle_max_pairs`` bounds the number of distinct ordered
    pairs the trajectory oracle may be asked to optimise.
    """

    friction: FrictionField = field(default_factory=FrictionField)
    weights: CostWeights = field(default_factory=CostWeights)
    options: TrajectoryOptions = field(default_factory=TrajectoryOptions)
    regen: bool = True
    oracle_max_pairs: int = 400
    bid_scale: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.oracle_max_pairs < 1:
            raise ValueError(
                "oracle_max_pairs must be >= 1, got {}".format(self.oracle_max_pairs)
            )
        scale = {
            int(k): check_positive(v, "bid_scale") for k, v in self.bid_scale.items()
        }
        object.__setattr__(self, "bid_scale", scale)

    def scale_for(self, robot_id: int) -> float:
        return self.bid_scale.get(robot_id, 1.0)

    def plan_context(self, robot: Robot) -> PlanContext:
        return PlanContext(
            robot.params, robot.battery, self.friction, self.weights, self.options
        )


class BaseBidMetric(ABC):
    """Base class for bid metrics.

    Subclasses implement :meth:`bid` and :meth:`name`. A metric may veto an
    instance up front by overriding :meth:`check_instance`.
    """

    kind: ClassVar[BidMetricKind]
    energy_valued: ClassVar[bool] = True

    @abstractmethod
    def bid(
        self, robot: Robot, robot_end: Point, task: Task, context: AuctionContext
    ) -> float:
        """Cost for ``robot`` to execute ``task`` starting at ``robot_end``.

        Joules for energy metrics, metres for the distance metric.
        """
        pass

    def check_instance(
        self, robots: Sequence[Robot], tasks: Sequence[Task], context: AuctionContext
    ) -> None:
        pass

    @abstractmethod
    def name(self) -> str:
        pass

    @classmethod
    def create(cls) -> Self:
        return cls()

    def __str__(self) -> str:
        return self.name()

    def __eq__(self, other: object) -> bool:
        return type(self) is type(other)

    def __hash__(self) -> int:
        return hash(type(self))


class EnergyBid(BaseBidMetric):
    """Closed-form bid with the rolling-resistance coefficient at the robot's
    position applied to both legs."""

    kind = BidMetricKind.ENERGY_CLOSED_FORM

    @override
    def bid(
        self, robot: Robot, robot_end: Point, task: Task, context: AuctionContext
    ) -> float:
        mu = context.friction.mu_at(robot_end)
        return bid_energy_approx(robot_end, task, robot.params, mu)

    @override
    def name(self) -> str:
        return "energy"


class DistanceBid(BaseBidMetric):
    kind = BidMetricKind.EUCLIDEAN_DISTANCE
    energy_valued = False

    @override
    def bid(
        self, robot: Robot, robot_end: Point, task: Task, context: AuctionContext
    ) -> float:
        robot_end = check_point(robot_end, "robot_end")
        return distance(robot_end, task.pickup) + distance(task.pickup, task.dropoff)

    @override
    def name(self) -> str:
        return "distance"


class ZonedEnergyBid(BaseBidMetric):
    """Closed-form bid integrating friction exactly across zone boundaries."""

    kind = BidMetricKind.ZONE_AWARE_ENERGY

    @override
    def bid(
        self, robot: Robot, robot_end: Point, task: Task, context: AuctionContext
    ) -> float:
        return bid_energy_zoned(robot_end, task, robot.params, context.friction)

    @override
    def name(self) -> str:
        return "zoned"


class OracleBid(BaseBidMetric):
    """Bid from optimised trajectories of both legs.

    Each round asks for the transit from every robot end to every unassigned
    pickup; over a whole auction this touches at most ``(n + m) * m`` transit
    pairs plus ``m`` loaded legs, which must stay within
    ``context.oracle_max_pairs``.
    """

    kind = BidMetricKind.EXACT_OCP_ORACLE

    @staticmethod
    def pair_count(n_robots: int, n_tasks: int) -> int:
        return (n_robots + n_tasks) * n_tasks + n_tasks

    @override
    def check_instance(
        self, robots: Sequence[Robot], tasks: Sequence[Task], context: AuctionContext
    ) -> None:
        pairs = self.pair_count(len(robots), len(tasks))
        if pairs > context.oracle_max_pairs:
            raise SizeGuardError(
                "Oracle bids need up to {} trajectory optimisations for n={}, m={};"
                " limit is {}".format(
                    pairs, len(robots), len(tasks), context.oracle_max_pairs
                )
            )

    @override
    def bid(
        self, robot: Robot, robot_end: Point, task: Task, context: AuctionContext
    ) -> float:
        robot_end = check_point(robot_end, "robot_end")
        return oracle_pair_cost(context.plan_context(robot))(robot_end, task)

    @override
    def name(self) -> str:
        return "oracle"


bid_metrics: Dict[str, Type[BaseBidMetric]] = {
    "energy": EnergyBid,
    "distance": DistanceBid,
    "zoned": ZonedEnergyBid,
    "oracle": OracleBid,
}

_by_kind: Dict[str, Type[BaseBidMetric]] = {
    cls.kind.value: cls for cls in bid_metrics.values()
}


def get_metric(metric: Union[str, BidMetricKind, BaseBidMetric]) -> BaseBidMetric:
    """Resolve a metric given by registry name, kind or instance."""
    if isinstance(metric, BaseBidMetric):
        return metric
    key = metric.value if isinstance(metric, BidMetricKind) else str(metric)
    if key in bid_metrics:
        return bid_metrics[key].create()
    if key in _by_kind:
        return _by_kind[key].create()
    raise ValueError(
        "Unknown bid metric {!r}, expected one of {}".format(
            metric, sorted(bid_metrics)
        )
    )


def bid(
    robot_end: Point,
    task: Task,
    metric: Union[str, BidMetricKind, BaseBidMetric],
    context: AuctionContext,
    robot: Robot,
) -> float:
    """Unscaled bid of ``robot`` for ``task`` from ``robot_end``."""
    return get_metric(metric).bid(robot, robot_end, task, context)


def metric_oracle(
    metric: Union[str, BidMetricKind, BaseBidMetric], context: AuctionContext
) -> RobotPairCost:
    """Bind a metric and context into a ``(robot, position, task)`` cost."""
    resolved = get_metric(metric)

    def cost(robot: Robot, position: Point, task: Task) -> float:
        return resolved.bid(robot, position, task, context)

    return cost
