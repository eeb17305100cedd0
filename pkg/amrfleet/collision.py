"""Pairwise conflict detection and speed-retiming refinement of fleet
trajectories."""
import warnings
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .domain import Point, distance
from .exceptions import BatteryDepletionError, ResidualConflictWarning
from .input_validation import check_positive
from .trajectory import RouteTrajectory, SegmentPlan, plan_phase

DEFAULT_D_SAFE = 0.5
SLOWDOWN_FACTORS = (0.85, 0.7, 0.55, 0.4)


@dataclass(frozen=True)
class ConflictWindow:
    robots: Tuple[int, int]
    t_interval: Tuple[float, float]
    min_separation: float

    def overlaps(self, other: "ConflictWindow") -> bool:
        return (
            self.robots == other.robots
            and self.t_interval[0] <= other.t_interval[1]
            and other.t_interval[0] <= self.t_interval[1]
        )


@dataclass
class RefinementResult:
    trajectories: List[RouteTrajectory]
    penalty_before: float
    penalty_after: float
    residual: List[ConflictWindow] = field(default_factory=list)
    resolved: bool = True

    def __str__(self) -> str:
        return (
            "Refinement Result:\n\tpenalty_before: {}\n\tpenalty_after: {}"
            "\n\tresidual: {}".format(
                self.penalty_before, self.penalty_after, len(self.residual)
            )
        )


def proximity_penalty(
    pos_i: Point, pos_j: Point, d_safe: float = DEFAULT_D_SAFE
) -> float:
    d_safe = check_positive(d_safe, "d_safe")
    return max(0.0, 1.0 - distance(pos_i, pos_j) / d_safe) ** 2


def _sampled(
    trajectories: Sequence[RouteTrajectory], dt: float
) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
    routes = [r for r in trajectories if r.segments]
    if not routes:
        return np.zeros(0), [], []
    t0 = min(r.t0 for r in routes)
    t1 = max(r.t_end for r in routes)
    n = int(np.floor((t1 - t0) / dt + 1e-9)) + 1
    ts = t0 + dt * np.arange(n)
    positions = [
        r.positions_at(ts) if r.segments else np.zeros((n, 2)) for r in trajectories
    ]
    active = [
        (ts >= r.t0) & (ts <= r.t_end) if r.segments else np.zeros(n, dtype=bool)
        for r in trajectories
    ]
    return ts, positions, active


def _separations(
    trajectories: Sequence[RouteTrajectory], dt: float
) -> Tuple[np.ndarray, Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray]]]:
    ts, positions, active = _sampled(trajectories, dt)
    pairs = {}
    for a, b in combinations(range(len(trajectories)), 2):
        if not len(ts):
            break
        sep = np.linalg.norm(positions[a] - positions[b], axis=1)
        key = tuple(sorted((trajectories[a].robot_id, trajectories[b].robot_id)))
        pairs[key] = (sep, active[a] & active[b])
    return ts, pairs  # type: ignore[return-value]


def penalty_integral(
    trajectories: Sequence[RouteTrajectory],
    d_safe: float = DEFAULT_D_SAFE,
    dt: float = 0.01,
) -> float:
    """Time integral of the summed pairwise proximity penalty over the common
    clock; parked robots do not contribute."""
    d_safe = check_positive(d_safe, "d_safe")
    _, pairs = _separations(trajectories, dt)
    total = 0.0
    for sep, both in pairs.values():
        phi = np.maximum(0.0, 1.0 - sep / d_safe) ** 2
        total += float(phi[both].sum()) * dt
    return total


def min_separation(trajectories: Sequence[RouteTrajectory], dt: float = 0.01) -> float:
    _, pairs = _separations(trajectories, dt)
    seps = [sep[both].min() for sep, both in pairs.values() if both.any()]
    return float(min(seps)) if seps else float("inf")


def detect_conflicts(
    trajectories: Sequence[RouteTrajectory],
    d_safe: float = DEFAULT_D_SAFE,
    dt: float = 0.01,
) -> List[ConflictWindow]:
    """Maximal windows in which two active robots are closer than ``d_safe``.

    Positions are sampled every ``dt`` on the common clock; windows of the
    same pair separated by less than ``2 dt`` are merged.
    """
    d_safe = check_positive(d_safe, "d_safe")
    ts, pairs = _separations(trajectories, dt)
    windows = []
    for robots, (sep, both) in pairs.items():
        idx = np.flatnonzero(both & (sep < d_safe))
        if not idx.size:
            continue
        breaks = np.flatnonzero(np.diff(idx) >= 2) + 1
        for run in np.split(idx, breaks):
            lo, hi = int(run[0]), int(run[-1])
            windows.append(
                ConflictWindow(
                    robots,
                    (float(ts[lo]), float(ts[hi])),
                    float(sep[run].min()),
                )
            )
    windows.sort(key=lambda w: (w.t_interval[0], w.robots))
    return windows


def conflicts_frame(conflicts: Sequence[ConflictWindow]) -> pd.DataFrame:
    rows = [
        {
            "robot_a": w.robots[0],
            "robot_b": w.robots[1],
            "t_start": w.t_interval[0],
            "t_end": w.t_interval[1],
            "min_sep": w.min_separation,
        }
        for w in conflicts
    ]
    return pd.DataFrame(
        rows, columns=["robot_a", "robot_b", "t_start", "t_end", "min_sep"]
    )


def retime_segment(route: RouteTrajectory, k: int, factor: float) -> RouteTrajectory:
    """Re-plan phase ``k`` on its own path at ``factor`` times its average
    speed and shift the later phases in time."""
    seg = route.segments[k]
    new = plan_phase(
        seg.start_state,
        seg.path.end,
        route.context,
        kind=seg.kind,
        task_id=seg.task_id,
        payload=seg.payload,
        index=seg.index,
        t_start=seg.t_start,
        boundary=seg.boundary,
        v_avg=seg.v_avg * factor,
        path=seg.path,
    )
    delta = new.t_end - seg.t_end
    later = [s.shifted(delta) for s in route.segments[k + 1 :]]
    return replace(route, segments=route.segments[:k] + [new] + later)


def replay_segments(route: RouteTrajectory, k: int) -> RouteTrajectory:
    """Re-integrate the phases after ``k`` from the realized end of phase
    ``k``, keeping their ramp shares and average speeds."""
    segments: List[SegmentPlan] = list(route.segments[: k + 1])
    for seg in route.segments[k + 1 :]:
        prev = segments[-1]
        segments.append(
            plan_phase(
                prev.end_state,
                seg.path.end,
                route.context,
                kind=seg.kind,
                task_id=seg.task_id,
                payload=seg.payload,
                index=seg.index,
                t_start=prev.t_end,
                boundary=seg.boundary,
                v_avg=seg.v_avg,
                shares=(seg.speed_profile.accel_share, seg.speed_profile.decel_share),
            )
        )
    return replace(route, segments=segments)


def _fleet_cost(
    routes: Sequence[RouteTrajectory], lambda_c: float, d_safe: float, dt: float
) -> Tuple[float, float]:
    penalty = penalty_integral(routes, d_safe, dt)
    return sum(r.objective_value for r in routes) + lambda_c * penalty, penalty


def refine(
    trajectories: Sequence[RouteTrajectory],
    conflicts: Sequence[ConflictWindow],
    lambda_c: float,
    d_safe: float = DEFAULT_D_SAFE,
    dt: Optional[float] = None,
    factors: Sequence[float] = SLOWDOWN_FACTORS,
    max_rounds: int = 20,
    verbose: int = 0,
) -> RefinementResult:
    """Resolve conflicts by slowing down the phases involved.

    For the earliest unresolved window, the phase of each robot active at the
    window start (higher robot id first) is re-planned at reduced average
    speed. A candidate is accepted when it lowers the total objective plus
    ``lambda_c`` times the penalty integral without raising the penalty.
    Task assignment and ordering are never changed.
    """
    lambda_c = check_positive(lambda_c, "lambda_c")
    routes = list(trajectories)
    if dt is None:
        dt = routes[0].context.options.dt if routes else 0.01
    cost, penalty = _fleet_cost(routes, lambda_c, d_safe, dt)
    penalty_before = penalty
    if not conflicts:
        return RefinementResult(routes, penalty_before, penalty_before, [], True)
    position = {r.robot_id: i for i, r in enumerate(routes)}
    failed: List[ConflictWindow] = []
    for round_ in range(max_rounds):
        windows = [
            w for w in detect_conflicts(routes, d_safe, dt)
            if not any(w.overlaps(f) for f in failed)
        ]
        if not windows:
            break
        window = windows[0]
        candidates = []
        for robot in sorted(window.robots, reverse=True):
            route = routes[position[robot]]
            k = route.segment_index_at(window.t_interval[0])
            if k is None:
                continue
            for factor in factors:
                try:
                    screened = retime_segment(route, k, factor)
                except (BatteryDepletionError, ValueError):
                    continue
                trial = list(routes)
                trial[position[robot]] = screened
                c, p = _fleet_cost(trial, lambda_c, d_safe, dt)
                if p <= penalty and c < cost:
                    candidates.append((c, robot, factor, k, screened))
        accepted = False
        for c, robot, factor, k, screened in sorted(candidates, key=lambda x: x[:3]):
            try:
                replayed = replay_segments(screened, k)
            except BatteryDepletionError:
                continue
            trial = list(routes)
            trial[position[robot]] = replayed
            c, p = _fleet_cost(trial, lambda_c, d_safe, dt)
            if p <= penalty and c < cost:
                routes, cost, penalty, accepted = trial, c, p, True
                if verbose:
                    print(
                        "refine: round {} robot {} phase {} x{:.2f} penalty {:.5f}"
                        "".format(round_, robot, k, factor, penalty)
                    )
                break
        if not accepted:
            failed.append(window)

    residual = detect_conflicts(routes, d_safe, dt)
    if residual:
        warnings.warn(
            "{} conflict window(s) left after refinement".format(len(residual)),
            ResidualConflictWarning,
        )
    return RefinementResult(routes, penalty_before, penalty, residual, not residual)
