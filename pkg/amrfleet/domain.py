"""Shared value types of the fleet problem."""
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    Tuple,
)

import numpy as np
import pandas as pd
from typing_extensions import Self, TypeAlias

from .exceptions import InfeasibleWaypointError
from .input_validation import (
    check_finite,
    check_fraction,
    check_nonnegative,
    check_point,
    check_positive,
)

Point: TypeAlias = Tuple[float, float]


class LayoutKind(str, Enum):
    GRID = "grid"
    RANDOM = "random"
    CLUSTERED = "clustered"


class PhaseKind(str, Enum):
    UNLOADED = "unloaded"
    LOADED = "loaded"


def distance(a: Point, b: Point) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def bearing(a: Point, b: Point) -> float:
    return math.atan2(b[1] - a[1], b[0] - a[0])


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, closed on all sides."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            check_finite(getattr(self, name), name)
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("Degenerate rectangle: {}".format(self))

    def contains(self, p: Point, tol: float = 0.0) -> bool:
        return (
            self.x_min - tol <= p[0] <= self.x_max + tol
            and self.y_min - tol <= p[1] <= self.y_max + tol
        )

    def interior_contains(self, p: Point) -> bool:
        return self.x_min < p[0] < self.x_max and self.y_min < p[1] < self.y_max

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class Workspace:
    """Rectangular floor ``[0, width] x [0, height]`` with optional obstacles.

    The keep-out field is the indicator of the union of ``keepout``
    rectangles: 1 strictly inside an obstacle and 0 elsewhere. The
    admissible band is ``[0, 0]``, so obstacle boundaries may be touched.
    """

    width: float = 20.0
    height: float = 20.0
    layout_kind: LayoutKind = LayoutKind.GRID
    keepout: Tuple[Rect, ...] = ()

    def __post_init__(self) -> None:
        check_positive(self.width, "width")
        check_positive(self.height, "height")
        object.__setattr__(self, "layout_kind", LayoutKind(self.layout_kind))
        object.__setattr__(self, "keepout", tuple(self.keepout))

    @property
    def bounds(self) -> Rect:
        return Rect(0.0, 0.0, self.width, self.height)

    def contains(self, p: Point, tol: float = 1e-9) -> bool:
        return self.bounds.contains(p, tol)

    def keepout_value(self, p: Point) -> float:
        return 1.0 if any(r.interior_contains(p) for r in self.keepout) else 0.0

    def is_admissible(self, p: Point) -> bool:
        return self.contains(p) and self.keepout_value(p) == 0.0

    def check_waypoint(self, p: Point) -> None:
        if not self.contains(p):
            raise InfeasibleWaypointError(p, "outside the workspace")
        if self.keepout_value(p) != 0.0:
            raise InfeasibleWaypointError(p, "inside a keep-out region")


@dataclass(frozen=True)
class Task:
    id: int
    pickup: Point
    dropoff: Point
    payload: float = 0.0
    priority: bool = False
    arrival_time: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "pickup", check_point(self.pickup, "pickup"))
        object.__setattr__(self, "dropoff", check_point(self.dropoff, "dropoff"))
        check_nonnegative(self.payload, "payload")
        check_nonnegative(self.arrival_time, "arrival_time")

    @property
    def loaded_length(self) -> float:
        return distance(self.pickup, self.dropoff)


@dataclass(frozen=True)
class RobotParams:
    """Chassis, drive train and payload limits of one robot.

    Units are SI throughout. ``regen_fraction`` is the share of kinetic
    energy recovered on deceleration by the closed-form energy model; the
    physics model recovers energy through the motor instead.
    """

    mass: float = 50.0
    wheelbase: float = 0.5
    wheel_radius: float = 0.1
    motor_constant: float = 1.2
    motor_resistance: float = 0.2
    motor_inertia: float = 0.001
    v_max: float = 1.5
    delta_f_max: float = 0.7
    voltage_max: float = 24.0
    brake_torque_max: float = 20.0
    efficiency: float = 0.85
    regen_fraction: float = 0.5
    w_max: float = 20.0

    def __post_init__(self) -> None:
        for name in (
            "mass",
            "wheelbase",
            "wheel_radius",
            "motor_constant",
            "motor_resistance",
            "motor_inertia",
            "v_max",
            "voltage_max",
            "brake_torque_max",
            "w_max",
        ):
            check_positive(getattr(self, name), name)
        check_positive(self.delta_f_max, "delta_f_max")
        if self.delta_f_max >= math.pi / 2:
            raise ValueError(
                "delta_f_max must be < pi/2, got {}".format(self.delta_f_max)
            )
        check_fraction(self.efficiency, "efficiency", low_open=True)
        check_fraction(self.regen_fraction, "regen_fraction")

    @property
    def turn_radius(self) -> float:
        """Minimum turning radius of the kinematic bicycle."""
        return self.wheelbase / math.tan(self.delta_f_max)

    def inertial_mass(self, payload: float) -> float:
        """Translational mass plus reflected motor inertia."""
        return self.mass + payload + self.motor_inertia / self.wheel_radius**2

    def check_payload(self, payload: float) -> float:
        payload = check_nonnegative(payload, "payload")
        if payload > self.w_max:
            raise ValueError(
                "payload {} exceeds w_max {}".format(payload, self.w_max)
            )
        return payload


@dataclass(frozen=True)
class BatteryParams:
    """Open-circuit voltage curve ``a1 e^(b1 s) + a2 e^(b2 s) + c s^2`` and
    capacity of the pack."""

    a1: float = 23.0
    b1: float = 0.05
    a2: float = -2.0
    b2: float = -15.0
    c: float = 1.5
    capacity: float = 72000.0
    soc_min: float = 0.1
    soc_max: float = 1.0

    def __post_init__(self) -> None:
        for name in ("a1", "b1", "a2", "b2", "c"):
            check_finite(getattr(self, name), name)
        check_positive(self.capacity, "capacity")
        check_fraction(self.soc_min, "soc_min")
        check_fraction(self.soc_max, "soc_max")
        if not self.soc_min < self.soc_max:
            raise ValueError(
                "soc_min must be < soc_max, got {} >= {}".format(
                    self.soc_min, self.soc_max
                )
            )
        grid = np.linspace(self.soc_min, self.soc_max, 101)
        if not (self.ocv(grid) > 0.0).all():
            raise ValueError("Open-circuit voltage must be positive over the SOC band")

    def ocv(self, soc: Any) -> Any:
        return (
            self.a1 * np.exp(self.b1 * soc)
            + self.a2 * np.exp(self.b2 * soc)
            + self.c * soc**2
        )


@dataclass(frozen=True)
class Robot:
    id: int
    depot: Point
    params: RobotParams = field(default_factory=RobotParams)
    battery: BatteryParams = field(default_factory=BatteryParams)
    heading: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "depot", check_point(self.depot, "depot"))
        check_finite(self.heading, "heading")

    def initial_state(self) -> "RobotState":
        return RobotState(
            self.depot[0], self.depot[1], self.heading, 0.0, self.battery.soc_max
        )


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    heading: float = 0.0
    speed: float = 0.0
    soc: float = 1.0

    def __post_init__(self) -> None:
        for name in ("x", "y", "heading"):
            check_finite(getattr(self, name), name)
        check_nonnegative(self.speed, "speed")
        check_fraction(self.soc, "soc")

    @property
    def position(self) -> Point:
        return (self.x, self.y)

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.x, self.y, self.heading, self.speed, self.soc)

    def check(self, params: RobotParams, tol: float = 1e-9) -> None:
        if self.speed > params.v_max + tol:
            raise ValueError(
                "speed {} exceeds v_max {}".format(self.speed, params.v_max)
            )


class ControlInput(NamedTuple):
    steer: float = 0.0
    voltage: float = 0.0
    brake: float = 0.0

    def within(self, params: RobotParams, tol: float = 1e-9) -> bool:
        return (
            abs(self.steer) <= params.delta_f_max + tol
            and -tol <= self.voltage <= params.voltage_max + tol
            and -tol <= self.brake <= params.brake_torque_max + tol
        )

    def clip(self, params: RobotParams) -> "ControlInput":
        return ControlInput(
            min(max(self.steer, -params.delta_f_max), params.delta_f_max),
            min(max(self.voltage, 0.0), params.voltage_max),
            min(max(self.brake, 0.0), params.brake_torque_max),
        )


@dataclass(frozen=True)
class CostWeights:
    """Weights of the energy-aware objective and the fleet-level terms.

    ``w1`` scales battery power, ``w2`` the SOC tracking error and ``w3`` the
    squared yaw rate. ``lambda_c`` weights the proximity penalty during
    collision refinement and ``rho`` charges each pending task in the
    cost-to-go.
    """

    w1: float = 1.0
    w2: float = 0.0
    w3: float = 0.01
    lambda_c: float = 1000.0
    rho: float = 1.0

    def __post_init__(self) -> None:
        for name in ("w1", "w2", "w3", "lambda_c", "rho"):
            check_nonnegative(getattr(self, name), name)


@dataclass(frozen=True)
class Schedule:
    """Per-robot task sequences.

    ``cursor[i]`` indexes the first task of robot ``i`` that has not started;
    everything before it is frozen. ``predicted_energy`` is in joules.
    """

    sequences: Mapping[int, Tuple[int, ...]]
    predicted_energy: Mapping[int, float] = field(default_factory=dict)
    cursor: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sequences = {
            int(k): tuple(int(t) for t in v) for k, v in self.sequences.items()
        }
        cursor = {k: int(self.cursor.get(k, 0)) for k in sequences}
        energy = {k: float(self.predicted_energy.get(k, 0.0)) for k in sequences}
        for k in set(self.cursor) | set(self.predicted_energy):
            if k not in sequences:
                raise ValueError("Unknown robot id {} in schedule".format(k))
        for k, c in cursor.items():
            if not 0 <= c <= len(sequences[k]):
                raise ValueError(
                    "cursor {} of robot {} outside [0, {}]".format(
                        c, k, len(sequences[k])
                    )
                )
        object.__setattr__(self, "sequences", dict(sorted(sequences.items())))
        object.__setattr__(self, "cursor", cursor)
        object.__setattr__(self, "predicted_energy", energy)

    @classmethod
    def empty(cls, robot_ids: Iterable[int]) -> Self:
        return cls({int(i): () for i in robot_ids})

    @property
    def robot_ids(self) -> List[int]:
        return list(self.sequences)

    @property
    def total_predicted_energy(self) -> float:
        return float(sum(self.predicted_energy.values()))

    def task_ids(self) -> Set[int]:
        return {t for seq in self.sequences.values() for t in seq}

    def robot_of(self, task_id: int) -> Optional[int]:
        for robot, seq in self.sequences.items():
            if task_id in seq:
                return robot
        return None

    def frozen(self, robot: int) -> Tuple[int, ...]:
        return self.sequences[robot][: self.cursor[robot]]

    def unstarted(self, robot: int) -> Tuple[int, ...]:
        return self.sequences[robot][self.cursor[robot] :]

    def with_cursor(self, robot: int, cursor: int) -> "Schedule":
        return replace(self, cursor={**self.cursor, robot: cursor})

    def with_sequence(
        self, robot: int, sequence: Sequence[int], energy: Optional[float] = None
    ) -> "Schedule":
        predicted = dict(self.predicted_energy)
        if energy is not None:
            predicted[robot] = energy
        return Schedule(
            {**self.sequences, robot: tuple(sequence)},
            predicted,
            {**self.cursor, robot: min(self.cursor.get(robot, 0), len(sequence))},
        )

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "robot": robot,
                "position": k,
                "task": task,
                "started": k < self.cursor[robot],
            }
            for robot, seq in self.sequences.items()
            for k, task in enumerate(seq)
        ]
        return pd.DataFrame(rows, columns=["robot", "position", "task", "started"])


def validate_partition(schedule: Schedule, tasks: Iterable[int]) -> bool:
    """True iff every task id appears exactly once over all sequences and no
    sequence names an unknown task."""
    expected = set(tasks)
    counts = Counter(t for seq in schedule.sequences.values() for t in seq)
    return set(counts) == expected and all(c == 1 for c in counts.values())


class Waypoint(NamedTuple):
    point: Point
    kind: Optional[PhaseKind] = None
    task_id: Optional[int] = None


def waypoint_list(
    depot: Point, sequence: Sequence[Task], return_to_depot: bool = True
) -> List[Waypoint]:
    """Expand a task sequence into the multiphase waypoint list.

    The phase entering a pickup and the depot return are unloaded, the phase
    entering a dropoff is loaded. An empty sequence gives the depot alone.
    """
    ids = [t.id for t in sequence]
    if len(set(ids)) != len(ids):
        raise ValueError("Task sequence contains duplicates: {}".format(ids))
    depot = check_point(depot, "depot")
    waypoints = [Waypoint(depot)]
    for task in sequence:
        waypoints.append(Waypoint(task.pickup, PhaseKind.UNLOADED, task.id))
        waypoints.append(Waypoint(task.dropoff, PhaseKind.LOADED, task.id))
    if return_to_depot and sequence:
        waypoints.append(Waypoint(depot, PhaseKind.UNLOADED, None))
    return waypoints


def task_index(tasks: Iterable[Task]) -> Dict[int, Task]:
    index: Dict[int, Task] = {}
    for task in tasks:
        if task.id in index:
            raise ValueError("Duplicate task id {}".format(task.id))
        index[task.id] = task
    return index


def robot_index(robots: Iterable[Robot]) -> Dict[int, Robot]:
    index: Dict[int, Robot] = {}
    for robot in robots:
        if robot.id in index:
            raise ValueError("Duplicate robot id {}".format(robot.id))
        index[robot.id] = robot
    return dict(sorted(index.items()))
