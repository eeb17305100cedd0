"""Seeded scenario generation and the scenario file format.

Every generator is a pure function of its arguments and seed. Scenarios are
JSON documents tagged with ``schema_version``.
"""
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.utils import check_random_state
from typing_extensions import Self

from .bids import AuctionContext
from .domain import (
    BatteryParams,
    LayoutKind,
    Point,
    Rect,
    Robot,
    RobotParams,
    Task,
    Workspace,
    distance,
)
from .energy import FrictionField, FrictionKind, bid_energy_zoned
from .input_validation import check_nonnegative, check_positive
from .rescheduler import DisruptionEvent, DisruptionKind
from .stats import pearson_r

SCHEMA_VERSION = 1
WALL_MARGIN = 1.5

Seed = Union[int, np.random.RandomState, None]


def _interior(workspace: Workspace, margin: float) -> Rect:
    if 2 * margin >= min(workspace.width, workspace.height):
        raise ValueError(
            "Wall margin {} leaves no room in a {} x {} workspace".format(
                margin, workspace.width, workspace.height
            )
        )
    return Rect(margin, margin, workspace.width - margin, workspace.height - margin)


class DepotLayout(str, Enum):
    """Where robots start.

    ``stations`` puts each robot on its own randomly chosen station.
    ``dock`` lines the fleet up at a charging dock along the bottom wall,
    facing into the floor.
    """

    STATIONS = "stations"
    DOCK = "dock"


def dock_depots(
    n_robots: int, workspace: Workspace, margin: float = WALL_MARGIN
) -> List[Point]:
    """``n_robots`` evenly spaced dock slots at height ``margin``."""
    if n_robots < 1:
        raise ValueError("n_robots must be >= 1, got {}".format(n_robots))
    box = _interior(workspace, margin)
    pitch = (box.x_max - box.x_min) / n_robots
    return [(box.x_min + (k + 0.5) * pitch, box.y_min) for k in range(n_robots)]


def generate_layout(
    kind: Union[str, LayoutKind],
    workspace: Workspace,
    station_count: int,
    seed: Seed = None,
    margin: float = WALL_MARGIN,
) -> List[Point]:
    """Station positions on the floor.

    ``grid`` places stations at the cell centres of the smallest near-square
    lattice holding them, row by row. ``random`` draws them uniformly and
    ``clustered`` around 3 to 5 seeded cell centres; both keep ``margin``
    clear of the walls and stay out of keep-outs.
    """
    kind = LayoutKind(kind)
    if station_count < 2:
        raise ValueError("station_count must be >= 2, got {}".format(station_count))
    if kind == LayoutKind.GRID:
        cols = math.ceil(math.sqrt(station_count))
        rows = math.ceil(station_count / cols)
        dx, dy = workspace.width / cols, workspace.height / rows
        lattice = [
            ((c + 0.5) * dx, (r + 0.5) * dy) for r in range(rows) for c in range(cols)
        ]
        return lattice[:station_count]
    random_state = check_random_state(seed)
    box = _interior(workspace, margin)

    def admissible(p: Point) -> bool:
        return box.contains(p) and workspace.keepout_value(p) == 0.0

    def uniform() -> Point:
        return (
            float(random_state.uniform(box.x_min, box.x_max)),
            float(random_state.uniform(box.y_min, box.y_max)),
        )

    stations: List[Point] = []
    if kind == LayoutKind.RANDOM:
        while len(stations) < station_count:
            p = uniform()
            if admissible(p):
                stations.append(p)
        return stations
    n_cells = int(random_state.randint(3, 6))
    centres = []
    while len(centres) < n_cells:
        p = uniform()
        if admissible(p):
            centres.append(p)
    spread = min(workspace.width, workspace.height) / 15.0
    for k in range(station_count):
        cx, cy = centres[k % n_cells]
        while True:
            p = (
                float(random_state.normal(cx, spread)),
                float(random_state.normal(cy, spread)),
            )
            if admissible(p):
                stations.append(p)
                break
    return stations


def generate_tasks(
    stations: Sequence[Point],
    m: int,
    payload_range: Tuple[float, float] = (0.0, 20.0),
    seed: Seed = None,
    first_id: int = 0,
) -> List[Task]:
    """``m`` tasks between distinct stations with uniform payloads."""
    if len(stations) < 2:
        raise ValueError("Need at least 2 stations, got {}".format(len(stations)))
    if m < 0:
        raise ValueError("m must be >= 0, got {}".format(m))
    lo, hi = payload_range
    check_nonnegative(lo, "payload_range low")
    if hi < lo:
        raise ValueError("payload_range must be ordered, got {}".format(payload_range))
    random_state = check_random_state(seed)
    tasks = []
    for k in range(m):
        a, b = random_state.choice(len(stations), size=2, replace=False)
        payload = lo if hi == lo else float(random_state.uniform(lo, hi))
        tasks.append(Task(first_id + k, stations[a], stations[b], payload))
    return tasks


def generate_friction_field(
    mu_range: Tuple[float, float],
    zone_grid: int = 2,
    seed: Seed = None,
    workspace: Workspace = Workspace(),
) -> FrictionField:
    """``zone_grid`` x ``zone_grid`` rectangular zones tiling the floor, each
    with mu uniform in ``mu_range``; a degenerate range gives a uniform
    field."""
    lo, hi = mu_range
    check_positive(lo, "mu_range low")
    if hi < lo:
        raise ValueError("mu_range must be ordered, got {}".format(mu_range))
    if hi == lo:
        return FrictionField.uniform(lo)
    if zone_grid < 1:
        raise ValueError("zone_grid must be >= 1, got {}".format(zone_grid))
    random_state = check_random_state(seed)
    dx, dy = workspace.width / zone_grid, workspace.height / zone_grid
    zones = []
    for r in range(zone_grid):
        for c in range(zone_grid):
            rect = Rect(c * dx, r * dy, (c + 1) * dx, (r + 1) * dy)
            zones.append((rect, float(random_state.uniform(lo, hi))))
    return FrictionField(FrictionKind.ZONED, zones=tuple(zones), default_mu=lo)


def energy_distance_correlation(
    stations: Sequence[Point],
    tasks: Sequence[Task],
    params: RobotParams,
    field: FrictionField,
    sample_count: int = 200,
    seed: Seed = None,
) -> float:
    """Pearson correlation between the zone-aware closed-form bid and the
    summed leg distance over sampled (station, task) pairs.

    Raises
    ------
    DegenerateSampleError
        Either sample has zero variance.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2, got {}".format(sample_count))
    if not stations or not tasks:
        raise ValueError("Need stations and tasks to sample from")
    random_state = check_random_state(seed)
    energy, dist = [], []
    for _ in range(sample_count):
        p = stations[random_state.randint(len(stations))]
        task = tasks[random_state.randint(len(tasks))]
        energy.append(bid_energy_zoned(p, task, params, field))
        dist.append(distance(p, task.pickup) + task.loaded_length)
    return pearson_r(dist, energy)


def _poisson_times(
    random_state: np.random.RandomState, rate: float, horizon: float
) -> List[float]:
    times: List[float] = []
    if rate <= 0.0:
        return times
    t = float(random_state.exponential(1.0 / rate))
    while t <= horizon:
        times.append(t)
        t += float(random_state.exponential(1.0 / rate))
    return times


def generate_disruptions(
    robot_ids: Sequence[int],
    stations: Sequence[Point],
    horizon: float,
    fault_rate: float = 0.0,
    priority_rate: float = 0.0,
    deviation_rate: float = 0.0,
    magnitude: float = 0.25,
    payload_range: Tuple[float, float] = (0.0, 20.0),
    first_task_id: int = 0,
    seed: Seed = None,
) -> List[DisruptionEvent]:
    """Seeded disruption stream over ``[0, horizon]``.

    Each kind arrives as a Poisson stream with its fleet-wide rate in events
    per second. Faults hit distinct robots and spare at least one. Priority
    tasks get fresh ids from ``first_task_id``.
    """
    check_positive(horizon, "horizon")
    for rate, name in (
        (fault_rate, "fault_rate"),
        (priority_rate, "priority_rate"),
        (deviation_rate, "deviation_rate"),
    ):
        check_nonnegative(rate, name)
    random_state = check_random_state(seed)
    robots = sorted(robot_ids)
    events: List[DisruptionEvent] = []
    healthy = list(robots)
    for t in _poisson_times(random_state, fault_rate, horizon):
        if len(healthy) <= 1:
            break
        robot = healthy.pop(random_state.randint(len(healthy)))
        events.append(DisruptionEvent(DisruptionKind.FAULT, t, robot=robot))
    priority_times = _poisson_times(random_state, priority_rate, horizon)
    if priority_times:
        tasks = generate_tasks(
            stations, len(priority_times), payload_range, random_state, first_task_id
        )
        for t, task in zip(priority_times, tasks):
            task = Task(task.id, task.pickup, task.dropoff, task.payload, True, t)
            events.append(DisruptionEvent(DisruptionKind.PRIORITY_TASK, t, task=task))
    if robots:
        for t in _poisson_times(random_state, deviation_rate, horizon):
            robot = robots[random_state.randint(len(robots))]
            events.append(
                DisruptionEvent(
                    DisruptionKind.ENERGY_DEVIATION, t, robot=robot, magnitude=magnitude
                )
            )
    return sorted(events, key=lambda e: (e.t, e.kind.value))


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of a generated scenario.

    Rates are fleet-wide events per second over ``horizon`` seconds.
    ``mu_range`` with equal ends gives uniform friction.
    """

    n_robots: int = 4
    n_tasks: int = 20
    layout: LayoutKind = LayoutKind.CLUSTERED
    width: float = 20.0
    height: float = 20.0
    station_count: int = 25
    payload_range: Tuple[float, float] = (0.0, 20.0)
    mu_range: Tuple[float, float] = (0.02, 0.02)
    zone_grid: int = 2
    fault_rate: float = 0.0
    priority_rate: float = 0.0
    deviation_rate: float = 0.0
    deviation_magnitude: float = 0.25
    horizon: float = 300.0
    wall_margin: float = WALL_MARGIN
    depot_layout: DepotLayout = DepotLayout.STATIONS
    return_to_depot: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "layout", LayoutKind(self.layout))
        object.__setattr__(self, "depot_layout", DepotLayout(self.depot_layout))
        object.__setattr__(self, "payload_range", tuple(self.payload_range))
        object.__setattr__(self, "mu_range", tuple(self.mu_range))
        if self.n_robots < 1:
            raise ValueError("n_robots must be >= 1, got {}".format(self.n_robots))
        if self.n_tasks < 0:
            raise ValueError("n_tasks must be >= 0, got {}".format(self.n_tasks))
        needed = 2 if self.depot_layout == DepotLayout.DOCK else max(2, self.n_robots)
        if self.station_count < needed:
            raise ValueError(
                "station_count must be >= {}, got {}".format(needed, self.station_count)
            )
        check_positive(self.horizon, "horizon")
        check_nonnegative(self.wall_margin, "wall_margin")

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["layout"] = self.layout.value
        out["depot_layout"] = self.depot_layout.value
        out["payload_range"] = list(self.payload_range)
        out["mu_range"] = list(self.mu_range)
        return out


@dataclass(frozen=True)
class Scenario:
    workspace: Workspace
    robots: Tuple[Robot, ...]
    tasks: Tuple[Task, ...]
    friction: FrictionField = field(default_factory=FrictionField)
    events: Tuple[DisruptionEvent, ...] = ()
    stations: Tuple[Point, ...] = ()
    return_to_depot: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "robots", tuple(self.robots))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "stations", tuple(self.stations))
        for p in [r.depot for r in self.robots] + [
            q for t in self.tasks for q in (t.pickup, t.dropoff)
        ]:
            if not self.workspace.contains(p):
                raise ValueError("Point {} lies outside the workspace".format(p))

    def context(self, **kwargs: Any) -> AuctionContext:
        return AuctionContext(friction=self.friction, **kwargs)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "return_to_depot": self.return_to_depot,
            "workspace": {
                "width": self.workspace.width,
                "height": self.workspace.height,
                "layout_kind": self.workspace.layout_kind.value,
                "keepout": [list(asdict(r).values()) for r in self.workspace.keepout],
            },
            "stations": [list(p) for p in self.stations],
            "robots": [
                {
                    "id": r.id,
                    "depot": list(r.depot),
                    "heading": r.heading,
                    "params": asdict(r.params),
                    "battery": asdict(r.battery),
                }
                for r in self.robots
            ],
            "tasks": [_task_to_dict(t) for t in self.tasks],
            "friction": {
                "kind": self.friction.kind.value,
                "uniform_mu": self.friction.uniform_mu,
                "default_mu": self.friction.default_mu,
                "zones": [
                    list(asdict(rect).values()) + [mu]
                    for rect, mu in self.friction.zones
                ],
            },
            "events": [event_to_dict(e) for e in self.events],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(
                "Unsupported scenario schema_version {!r}, expected {}".format(
                    version, SCHEMA_VERSION
                )
            )
        ws = data["workspace"]
        workspace = Workspace(
            ws["width"],
            ws["height"],
            LayoutKind(ws.get("layout_kind", "grid")),
            tuple(Rect(*r) for r in ws.get("keepout", [])),
        )
        robots = tuple(
            Robot(
                r["id"],
                tuple(r["depot"]),
                RobotParams(**r.get("params", {})),
                BatteryParams(**r.get("battery", {})),
                r.get("heading", 0.0),
            )
            for r in data["robots"]
        )
        fr = data.get("friction", {"kind": "uniform", "uniform_mu": 0.02})
        friction = FrictionField(
            FrictionKind(fr["kind"]),
            uniform_mu=fr.get("uniform_mu", 0.02),
            zones=tuple((Rect(*z[:4]), z[4]) for z in fr.get("zones", [])),
            default_mu=fr.get("default_mu", fr.get("uniform_mu", 0.02)),
        )
        events = tuple(event_from_dict(e) for e in data.get("events", []))
        return cls(
            workspace,
            robots,
            tuple(_task_from_dict(t) for t in data["tasks"]),
            friction,
            events,
            tuple((float(x), float(y)) for x, y in data.get("stations", [])),
            bool(data.get("return_to_depot", True)),
            int(data.get("seed", 0)),
        )


def _task_to_dict(task: Task) -> Dict[str, Any]:
    return {
        "id": task.id,
        "pickup": list(task.pickup),
        "dropoff": list(task.dropoff),
        "payload": task.payload,
        "priority": task.priority,
        "arrival_time": task.arrival_time,
    }


def _task_from_dict(data: Dict[str, Any]) -> Task:
    return Task(
        data["id"],
        tuple(data["pickup"]),
        tuple(data["dropoff"]),
        data.get("payload", 0.0),
        bool(data.get("priority", False)),
        data.get("arrival_time", 0.0),
    )


def event_to_dict(event: DisruptionEvent) -> Dict[str, Any]:
    return {
        "kind": event.kind.value,
        "t": event.t,
        "robot": event.robot,
        "task": None if event.task is None else _task_to_dict(event.task),
        "magnitude": event.magnitude,
    }


def event_from_dict(data: Dict[str, Any]) -> DisruptionEvent:
    task = data.get("task")
    return DisruptionEvent(
        DisruptionKind(data["kind"]),
        data["t"],
        robot=data.get("robot"),
        task=None if task is None else _task_from_dict(task),
        magnitude=data.get("magnitude", 0.25),
    )


def load_events(path: Union[str, Path]) -> List[DisruptionEvent]:
    """Read a disruption stream: a JSON list of events, or an object with an
    ``events`` list such as a scenario file."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("events", [])
    return sorted((event_from_dict(e) for e in data), key=lambda e: (e.t, e.kind.value))


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2, sort_keys=True))


def load_scenario(path: Union[str, Path]) -> Scenario:
    return Scenario.from_dict(json.loads(Path(path).read_text()))


def generate_scenario(
    spec: ScenarioSpec, params: Optional[RobotParams] = None
) -> Scenario:
    """Build a complete scenario from ``spec``.

    Layout, tasks, friction, depots and disruptions draw from independent
    streams derived from ``spec.seed``, so changing one rate leaves the
    other draws unchanged.
    """
    params = params or RobotParams()
    streams = check_random_state(spec.seed).randint(0, 2**31 - 1, size=5)
    workspace = Workspace(spec.width, spec.height, spec.layout)
    stations = generate_layout(
        spec.layout, workspace, spec.station_count, int(streams[0]), spec.wall_margin
    )
    tasks = generate_tasks(stations, spec.n_tasks, spec.payload_range, int(streams[1]))
    friction = generate_friction_field(
        spec.mu_range, spec.zone_grid, int(streams[2]), workspace
    )
    if spec.depot_layout == DepotLayout.DOCK:
        robots = tuple(
            Robot(i, p, params, heading=math.pi / 2)
            for i, p in enumerate(
                dock_depots(spec.n_robots, workspace, spec.wall_margin)
            )
        )
    else:
        depots = check_random_state(int(streams[3])).choice(
            len(stations), size=spec.n_robots, replace=False
        )
        robots = tuple(
            Robot(i, stations[k], params)
            for i, k in enumerate(sorted(int(d) for d in depots))
        )
    events = generate_disruptions(
        [r.id for r in robots],
        stations,
        spec.horizon,
        spec.fault_rate,
        spec.priority_rate,
        spec.deviation_rate,
        spec.deviation_magnitude,
        spec.payload_range,
        first_task_id=spec.n_tasks,
        seed=int(streams[4]),
    )
    return Scenario(
        workspace,
        robots,
        tuple(tasks),
        friction,
        tuple(events),
        tuple(stations),
        spec.return_to_depot,
        spec.seed,
    )
