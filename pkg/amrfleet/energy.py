"""Closed-form energy model: segment energy, bids, route energy and the
asymmetric transition matrix."""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np
from typing_extensions import Self, TypeAlias

from .domain import Point, Rect, RobotParams, Task, distance
from .input_validation import check_nonnegative, check_point, check_positive

GRAVITY = 9.80665

PairCost: TypeAlias = Callable[[Point, Task], float]
"""Cost of travelling unloaded from a position to a task's pickup and then
executing the task."""

RouteCost: TypeAlias = Callable[[Point, Sequence[Task]], float]


class FrictionKind(str, Enum):
    UNIFORM = "uniform"
    ZONED = "zoned"


@dataclass(frozen=True)
class FrictionField:
    """Rolling-resistance coefficient over the floor.

    Zoned fields resolve overlapping rectangles by first match and fall back
    to ``default_mu`` outside every zone.
    """

    kind: FrictionKind = FrictionKind.UNIFORM
    uniform_mu: float = 0.02
    zones: Tuple[Tuple[Rect, float], ...] = ()
    default_mu: float = 0.02

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FrictionKind(self.kind))
        object.__setattr__(
            self, "zones", tuple((rect, float(mu)) for rect, mu in self.zones)
        )
        check_positive(self.uniform_mu, "uniform_mu")
        check_positive(self.default_mu, "default_mu")
        for _, mu in self.zones:
            check_positive(mu, "zone mu")
        if self.kind == FrictionKind.ZONED and not self.zones:
            raise ValueError("A zoned friction field needs at least one zone")

    @classmethod
    def uniform(cls, mu: float) -> Self:
        return cls(FrictionKind.UNIFORM, uniform_mu=mu, default_mu=mu)

    @property
    def mu_values(self) -> List[float]:
        if self.kind == FrictionKind.UNIFORM:
            return [self.uniform_mu]
        return [mu for _, mu in self.zones]

    def mu_at(self, p: Point) -> float:
        if self.kind == FrictionKind.UNIFORM:
            return self.uniform_mu
        for rect, mu in self.zones:
            if rect.contains(p):
                return mu
        return self.default_mu

    def path_integral(self, a: Point, b: Point) -> float:
        """Exact line integral of mu along the straight segment ``a -> b``.

        The segment is split wherever it crosses a zone edge and mu is
        constant on each piece.
        """
        length = distance(a, b)
        if self.kind == FrictionKind.UNIFORM or length == 0.0:
            return self.mu_at(a) * length
        dx, dy = b[0] - a[0], b[1] - a[1]
        cuts = {0.0, 1.0}
        for rect, _ in self.zones:
            for edge, origin, delta in (
                (rect.x_min, a[0], dx),
                (rect.x_max, a[0], dx),
                (rect.y_min, a[1], dy),
                (rect.y_max, a[1], dy),
            ):
                if delta != 0.0:
                    s = (edge - origin) / delta
                    if 0.0 < s < 1.0:
                        cuts.add(s)
        params = sorted(cuts)
        total = 0.0
        for s0, s1 in zip(params, params[1:]):
            mid = 0.5 * (s0 + s1)
            total += self.mu_at((a[0] + mid * dx, a[1] + mid * dy)) * (s1 - s0)
        return total * length


@dataclass(frozen=True)
class SegmentSpec:
    start: Point
    end: Point
    payload: float = 0.0
    v0: float = 0.0
    vf: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", check_point(self.start, "start"))
        object.__setattr__(self, "end", check_point(self.end, "end"))
        check_nonnegative(self.payload, "payload")
        check_nonnegative(self.v0, "v0")
        check_nonnegative(self.vf, "vf")

    @property
    def length(self) -> float:
        return distance(self.start, self.end)

    def check(self, params: RobotParams) -> None:
        if max(self.v0, self.vf) > params.v_max:
            raise ValueError(
                "Boundary speeds ({}, {}) exceed v_max {}".format(
                    self.v0, self.vf, params.v_max
                )
            )


def _combine(
    friction_work: float,
    kinetic: float,
    params: RobotParams,
    regen_enabled: bool,
) -> float:
    if kinetic >= 0.0:
        return (friction_work + kinetic) / params.efficiency
    if regen_enabled:
        # recovered energy is not amplified by the drive-train efficiency
        return friction_work / params.efficiency + params.regen_fraction * kinetic
    return max((friction_work + kinetic) / params.efficiency, 0.0)


def segment_energy(
    spec: SegmentSpec, params: RobotParams, mu: float, regen_enabled: bool = True
) -> float:
    """Energy drawn from the battery to drive one straight segment.

    Parameters
    ----------
    spec :
        Segment geometry, payload and boundary speeds.
    params :
        Robot parameters; uses mass, efficiency and regen_fraction.
    mu :
        Rolling-resistance coefficient along the segment.
    regen_enabled :
        When False a decelerating segment never returns energy and the result
        is clamped at zero.

    Returns
    -------
    float
        Energy in joules.
    """
    mu = check_positive(mu, "mu")
    spec.check(params)
    m = params.mass + spec.payload
    kinetic = 0.5 * m * (spec.vf**2 - spec.v0**2)
    return _combine(mu * m * GRAVITY * spec.length, kinetic, params, regen_enabled)


def segment_energy_in_field(
    spec: SegmentSpec,
    params: RobotParams,
    field: FrictionField,
    regen_enabled: bool = True,
) -> float:
    """As :func:`segment_energy` with friction work integrated over ``field``."""
    spec.check(params)
    m = params.mass + spec.payload
    kinetic = 0.5 * m * (spec.vf**2 - spec.v0**2)
    friction_work = field.path_integral(spec.start, spec.end) * m * GRAVITY
    return _combine(friction_work, kinetic, params, regen_enabled)


def e_approx(
    a: Point,
    b: Point,
    payload: float,
    params: RobotParams,
    mu: float,
    v0: float = 0.0,
    vf: float = 0.0,
) -> float:
    """Single leg of the bid approximation; the kinetic term is clamped at 0."""
    m = params.mass + payload
    kinetic = max(0.5 * m * (vf**2 - v0**2), 0.0)
    return (mu * m * GRAVITY * distance(a, b) + kinetic) / params.efficiency


def bid_energy_approx(
    robot_end: Point, task: Task, params: RobotParams, mu: float
) -> float:
    robot_end = check_point(robot_end, "robot_end")
    return e_approx(robot_end, task.pickup, 0.0, params, mu) + e_approx(
        task.pickup, task.dropoff, task.payload, params, mu
    )


def bid_energy_zoned(
    robot_end: Point, task: Task, params: RobotParams, field: FrictionField
) -> float:
    """Bid with friction work integrated exactly across zone crossings."""
    robot_end = check_point(robot_end, "robot_end")
    unloaded = field.path_integral(robot_end, task.pickup) * params.mass
    loaded = field.path_integral(task.pickup, task.dropoff) * (
        params.mass + task.payload
    )
    return (unloaded + loaded) * GRAVITY / params.efficiency


def route_segments(
    start: Point, sequence: Sequence[Task], return_to_depot: bool = False
) -> List[SegmentSpec]:
    segments = []
    position = start
    for task in sequence:
        segments.append(SegmentSpec(position, task.pickup, 0.0))
        segments.append(SegmentSpec(task.pickup, task.dropoff, task.payload))
        position = task.dropoff
    if return_to_depot and sequence:
        segments.append(SegmentSpec(position, start, 0.0))
    return segments


def route_energy_closed_form(
    depot: Point,
    sequence: Sequence[Task],
    params: RobotParams,
    field: Union[FrictionField, float],
    regen_enabled: bool = True,
    return_to_depot: bool = False,
) -> float:
    """Sum of unloaded and loaded segment energies along a task sequence."""
    if not isinstance(field, FrictionField):
        field = FrictionField.uniform(field)
    return math.fsum(
        segment_energy_in_field(s, params, field, regen_enabled)
        for s in route_segments(check_point(depot, "depot"), sequence, return_to_depot)
    )


def closed_form_pair_cost(
    params: RobotParams, field: FrictionField, regen_enabled: bool = True
) -> PairCost:
    def cost(position: Point, task: Task) -> float:
        return route_energy_closed_form(position, (task,), params, field, regen_enabled)

    return cost


def closed_form_route_cost(
    params: RobotParams, field: FrictionField, regen_enabled: bool = True
) -> RouteCost:
    def cost(start: Point, sequence: Sequence[Task]) -> float:
        return route_energy_closed_form(start, sequence, params, field, regen_enabled)

    return cost


def transition_matrix(tasks: Sequence[Task], cost_oracle: PairCost) -> np.ndarray:
    """Asymmetric matrix of ordered task-to-task costs.

    Entry ``(a, b)`` is the cost of executing ``tasks[b]`` from the dropoff of
    ``tasks[a]``. The diagonal is evaluated from the task's own pickup, so it
    holds the loaded leg alone.
    """
    m = len(tasks)
    A = np.empty((m, m), dtype=np.float64)
    for a, ta in enumerate(tasks):
        for b, tb in enumerate(tasks):
            start = ta.pickup if a == b else ta.dropoff
            A[a, b] = cost_oracle(start, tb)
    return A
