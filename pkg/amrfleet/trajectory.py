"""Per-robot trajectory generation.

Each phase between consecutive waypoints follows a Dubins path whose
duration is fixed by the timing law ``T = DL / v_avg``. A trapezoidal speed
profile along that path is tracked by a closed-loop controller through the
physics model, and the ramp shares of the trapezoid are tuned by coordinate
descent on the realized objective.
"""
import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Any, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .domain import (
    BatteryParams,
    ControlInput,
    CostWeights,
    PhaseKind,
    Point,
    RobotParams,
    RobotState,
    Task,
    Waypoint,
    Workspace,
    bearing,
    distance,
    waypoint_list,
)
from .dubins import DubinsPath, Pose, shortest_path, straight_path, wrap_angle
from .energy import GRAVITY, FrictionField, PairCost
from .exceptions import BatteryDepletionError, ModelBlowUpError
from .input_validation import (
    check_fraction,
    check_nonnegative,
    check_point,
    check_positive,
)
from .physics import V_EPS, IntegrationResult, StateTuple, integrate
from .utils import DescentResult, coordinate_descent


@dataclass(frozen=True)
class TrajectoryOptions:
    """Resolution, optimiser budget and controller gains of route planning.

    ``dt`` is the step of every reported trajectory; candidate profiles are
    scored at the coarser ``opt_dt`` while optimising.
    """

    v_avg_fraction: float = 0.8
    dt: float = 0.01
    opt_dt: float = 0.05
    max_iter: int = 6
    step: float = 0.08
    min_step: float = 0.01
    accel_share: float = 0.1
    decel_share: float = 0.1
    min_share: float = 0.02
    cruise_cap: float = 0.98
    regen: bool = True
    optimize: bool = True
    k_v: float = 4.0
    k_psi: float = 2.0
    k_e: float = 1.0
    k_s: float = 1.0
    position_tol: float = 0.05
    sample_step: float = 0.1
    verbose: int = 0

    def __post_init__(self) -> None:
        check_fraction(self.v_avg_fraction, "v_avg_fraction", low_open=True)
        check_positive(self.dt, "dt")
        check_positive(self.opt_dt, "opt_dt")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0, got {}".format(self.max_iter))
        check_positive(self.step, "step")
        check_positive(self.min_step, "min_step")
        check_fraction(self.min_share, "min_share", low_open=True, high_open=True)
        for name in ("accel_share", "decel_share"):
            share = check_fraction(getattr(self, name), name, low_open=True)
            if share < self.min_share:
                raise ValueError("{} must be >= min_share".format(name))
        if self.accel_share + self.decel_share > 1.0:
            raise ValueError("accel_share + decel_share must be <= 1")
        check_fraction(self.cruise_cap, "cruise_cap", low_open=True)
        for name in ("k_v", "k_psi", "k_e", "k_s", "position_tol", "sample_step"):
            check_nonnegative(getattr(self, name), name)
        check_positive(self.sample_step, "sample_step")

    def v_avg(self, params: RobotParams) -> float:
        return self.v_avg_fraction * params.v_max


@dataclass(frozen=True)
class PlanContext:
    """Everything route planning needs besides the route itself."""

    params: RobotParams = field(default_factory=RobotParams)
    battery: BatteryParams = field(default_factory=BatteryParams)
    friction: FrictionField = field(default_factory=FrictionField)
    weights: CostWeights = field(default_factory=CostWeights)
    options: TrajectoryOptions = field(default_factory=TrajectoryOptions)
    workspace: Optional[Workspace] = None

    def admissible(self, path: DubinsPath) -> bool:
        if self.workspace is None:
            return True
        return all(
            self.workspace.is_admissible((x, y))
            for x, y, _ in path.sample(self.options.sample_step)
        )


@dataclass(frozen=True)
class SpeedProfile:
    """Trapezoidal speed along a path of length ``distance`` over ``duration``.

    The cruise speed is implied by the covered distance::

        vc = (DL - (v0 ta + vf td) / 2) / (T - (ta + td) / 2)
    """

    duration: float
    distance: float
    v0: float = 0.0
    vf: float = 0.0
    accel_share: float = 0.1
    decel_share: float = 0.1

    @classmethod
    def from_timing_law(
        cls,
        distance: float,
        v_avg: float,
        v0: float = 0.0,
        vf: float = 0.0,
        accel_share: float = 0.1,
        decel_share: float = 0.1,
    ) -> "SpeedProfile":
        v_avg = check_positive(v_avg, "v_avg")
        return cls(distance / v_avg, distance, v0, vf, accel_share, decel_share)

    @property
    def t_accel(self) -> float:
        return self.accel_share * self.duration

    @property
    def t_decel(self) -> float:
        return self.decel_share * self.duration

    @property
    def cruise_speed(self) -> float:
        if self.duration == 0.0:
            return 0.0
        ta, td = self.t_accel, self.t_decel
        return (self.distance - 0.5 * (self.v0 * ta + self.vf * td)) / (
            self.duration - 0.5 * (ta + td)
        )

    def feasible(self, v_max: float, cruise_cap: float = 1.0) -> bool:
        if self.duration == 0.0:
            return True
        shares_ok = (
            self.accel_share > 0.0
            and self.decel_share > 0.0
            and self.accel_share + self.decel_share <= 1.0
        )
        return shares_ok and 0.0 <= self.cruise_speed <= cruise_cap * v_max

    def speed(self, t: float) -> float:
        if self.duration == 0.0:
            return self.vf
        ta, td, vc = self.t_accel, self.t_decel, self.cruise_speed
        if t <= 0.0:
            return self.v0
        if t < ta:
            return self.v0 + (vc - self.v0) * t / ta
        if t < self.duration - td:
            return vc
        if t < self.duration:
            return vc + (self.vf - vc) * (t - (self.duration - td)) / td
        return self.vf

    def accel(self, t: float) -> float:
        if self.duration == 0.0 or t < 0.0 or t >= self.duration:
            return 0.0
        ta, td, vc = self.t_accel, self.t_decel, self.cruise_speed
        if t < ta:
            return (vc - self.v0) / ta
        if t < self.duration - td:
            return 0.0
        return (self.vf - vc) / td

    def travelled(self, t: float) -> float:
        if self.duration == 0.0 or t <= 0.0:
            return 0.0
        if t >= self.duration:
            return self.distance
        ta, td, vc = self.t_accel, self.t_decel, self.cruise_speed
        if t < ta:
            return self.v0 * t + 0.5 * (vc - self.v0) / ta * t * t
        s = 0.5 * (self.v0 + vc) * ta
        t_cruise_end = self.duration - td
        if t < t_cruise_end:
            return s + vc * (t - ta)
        s += vc * (t_cruise_end - ta)
        tau = t - t_cruise_end
        return s + vc * tau + 0.5 * (self.vf - vc) / td * tau * tau


class TrackingController:
    """Closed-loop tracking of a speed profile along a Dubins path.

    Steering combines curvature feed-forward with heading and lateral error
    feedback. The longitudinal channel computes the torque for the reference
    acceleration plus speed feedback and realises it with the motor,
    regenerating before braking mechanically.
    """

    def __init__(
        self,
        path: DubinsPath,
        profile: SpeedProfile,
        params: RobotParams,
        payload: float,
        friction: FrictionField,
        options: TrajectoryOptions,
    ) -> None:
        self.path = path
        self.profile = profile
        self.params = params
        self.payload = payload
        self.friction = friction
        self.options = options
        self._inertia = params.wheel_radius * params.inertial_mass(payload)

    def __call__(self, t: float, s: StateTuple) -> ControlInput:
        p, o = self.params, self.options
        x, y, psi, v, _ = s
        s_ref = self.profile.travelled(t)
        x_ref, y_ref, psi_ref = self.path.pose_at(s_ref)
        kappa_ref = self.path.curvature_at(s_ref)
        c, sn = math.cos(psi_ref), math.sin(psi_ref)
        e_long = c * (x - x_ref) + sn * (y - y_ref)
        e_lat = -sn * (x - x_ref) + c * (y - y_ref)

        kappa = kappa_ref + o.k_psi * wrap_angle(psi_ref - psi) - o.k_e * e_lat
        steer = math.atan(p.wheelbase * kappa)

        v_ref = max(self.profile.speed(t) - o.k_s * e_long, 0.0)
        a_cmd = self.profile.accel(t) + o.k_v * (v_ref - v)
        mu = self.friction.mu_at((x, y))
        weight = (p.mass + self.payload) * GRAVITY
        tau_rr = mu * weight * p.wheel_radius * math.tanh(v / V_EPS)
        tau = self._inertia * a_cmd + tau_rr
        if v >= p.v_max:
            tau = min(tau, tau_rr)

        back_emf = p.motor_constant * v / p.wheel_radius
        if tau >= 0.0:
            voltage = back_emf + p.motor_resistance * tau / p.motor_constant
            return ControlInput(steer, voltage, 0.0).clip(p)
        if not o.regen:
            return ControlInput(steer, back_emf, -tau).clip(p)
        voltage = max(back_emf + p.motor_resistance * tau / p.motor_constant, 0.0)
        tau_motor = p.motor_constant * (voltage - back_emf) / p.motor_resistance
        brake = max(tau_motor - tau, 0.0)
        return ControlInput(steer, voltage, brake).clip(p)


@dataclass
class SegmentPlan:
    """One realized phase of a route.

    ``result`` is in phase-local time starting at 0; ``t_start`` places the
    phase on the fleet clock.
    """

    index: int
    kind: Optional[PhaseKind]
    task_id: Optional[int]
    payload: float
    path: DubinsPath
    speed_profile: SpeedProfile
    t_start: float
    result: IntegrationResult
    nominal_objective: float
    v_avg: float
    descent: Optional[DescentResult] = None

    @property
    def duration(self) -> float:
        return self.speed_profile.duration

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    @property
    def boundary(self) -> Tuple[float, float]:
        return (self.speed_profile.v0, self.speed_profile.vf)

    @property
    def dubins_length(self) -> float:
        return self.path.length

    @property
    def energy(self) -> float:
        return self.result.energy

    @property
    def objective(self) -> float:
        return self.result.objective

    @property
    def start_state(self) -> RobotState:
        x, y, psi, v, soc = (float(a) for a in self.result.states[0])
        return RobotState(x, y, psi, max(v, 0.0), min(max(soc, 0.0), 1.0))

    @property
    def end_state(self) -> RobotState:
        return self.result.final_state()

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.result.t

    def shifted(self, delta: float) -> "SegmentPlan":
        return replace(self, t_start=self.t_start + delta)


def _realize(
    start: RobotState,
    path: DubinsPath,
    profile: SpeedProfile,
    payload: float,
    context: PlanContext,
    dt: float,
) -> IntegrationResult:
    controller = TrackingController(
        path, profile, context.params, payload, context.friction, context.options
    )
    return integrate(
        start,
        controller,
        payload,
        (0.0, profile.duration),
        dt,
        context.params,
        context.battery,
        context.friction,
        context.weights,
    )


def plan_phase(
    start: RobotState,
    target: Pose,
    context: PlanContext,
    kind: Optional[PhaseKind] = None,
    task_id: Optional[int] = None,
    payload: float = 0.0,
    index: int = 0,
    t_start: float = 0.0,
    boundary: Tuple[float, float] = (0.0, 0.0),
    v_avg: Optional[float] = None,
    path: Optional[DubinsPath] = None,
    shares: Optional[Tuple[float, float]] = None,
) -> SegmentPlan:
    """Plan and realize one phase from ``start`` to the pose ``target``.

    The Dubins path (unless given) is the shortest admissible word, the
    duration follows the timing law and the ramp shares are optimised unless
    ``shares`` fixes them. Of the optimised and the nominal profile the one
    with the lower realized objective is kept.
    """
    params, opts = context.params, context.options
    v_avg = v_avg if v_avg is not None else opts.v_avg(params)
    v0, vf = boundary
    rho = params.turn_radius
    start_pose = (start.x, start.y, start.heading)
    chosen: DubinsPath
    if path is not None:
        chosen = path
    elif distance(start.position, (target[0], target[1])) <= opts.position_tol:
        chosen = DubinsPath(start_pose, "LSL", (0.0, 0.0, 0.0), rho)
    else:
        chosen = shortest_path(start_pose, target, rho, context.admissible)

    def profile_for(fa: float, fd: float) -> SpeedProfile:
        return SpeedProfile.from_timing_law(chosen.length, v_avg, v0, vf, fa, fd)

    def scored(x: np.ndarray) -> float:
        profile = profile_for(float(x[0]), float(x[1]))
        if not profile.feasible(params.v_max, opts.cruise_cap):
            return math.inf
        try:
            result = _realize(start, chosen, profile, payload, context, opts.opt_dt)
        except (BatteryDepletionError, ModelBlowUpError):
            return math.inf
        return result.objective

    nominal_shares = (opts.accel_share, opts.decel_share)
    if shares is not None:
        nominal_shares = shares
    nominal = profile_for(*nominal_shares)
    if not nominal.feasible(params.v_max, opts.cruise_cap):
        raise ValueError(
            "Speed profile infeasible for DL={:.3f} m, v_avg={:.3f} m/s".format(
                chosen.length, v_avg
            )
        )
    nominal_result = _realize(start, chosen, nominal, payload, context, opts.dt)
    best, best_result, descent = nominal, nominal_result, None
    if shares is None and opts.optimize and opts.max_iter > 0 and chosen.length > 0.0:
        hi = 1.0 - opts.min_share
        descent = coordinate_descent(
            scored,
            nominal_shares,
            (opts.min_share, opts.min_share),
            (hi, hi),
            step=opts.step,
            min_step=opts.min_step,
            max_iter=opts.max_iter,
            verbose=opts.verbose,
        )
        candidate = profile_for(float(descent.x[0]), float(descent.x[1]))
        if candidate != nominal and candidate.feasible(params.v_max, opts.cruise_cap):
            realized: Optional[IntegrationResult]
            try:
                realized = _realize(start, chosen, candidate, payload, context, opts.dt)
            except (BatteryDepletionError, ModelBlowUpError):
                realized = None
            if realized is not None and realized.objective < nominal_result.objective:
                best, best_result = candidate, realized
    return SegmentPlan(
        index=index,
        kind=kind,
        task_id=task_id,
        payload=payload,
        path=chosen,
        speed_profile=best,
        t_start=t_start,
        result=best_result,
        nominal_objective=nominal_result.objective,
        v_avg=v_avg,
        descent=descent,
    )


@dataclass
class RouteTrajectory:
    """Realized route of one robot on the fleet clock.

    A robot is parked at its last position after ``t_end`` or, once halted,
    after ``t_stop``.
    """

    robot_id: int
    start_state: RobotState
    t0: float
    segments: List[SegmentPlan]
    context: PlanContext
    depot: Point
    t_stop: Optional[float] = None

    @property
    def total_energy(self) -> float:
        if self.t_stop is not None:
            return self.cumulative_energy_at(self.t_stop)
        return float(math.fsum(s.energy for s in self.segments))

    @property
    def objective_value(self) -> float:
        return float(math.fsum(s.objective for s in self.segments))

    @property
    def nominal_objective(self) -> float:
        return float(math.fsum(s.nominal_objective for s in self.segments))

    @property
    def t_end(self) -> float:
        end = self.segments[-1].t_end if self.segments else self.t0
        return min(end, self.t_stop) if self.t_stop is not None else end

    @property
    def end_state(self) -> RobotState:
        if self.t_stop is not None:
            return self.state_at(self.t_stop)
        return self.segments[-1].end_state if self.segments else self.start_state

    @property
    def task_sequence(self) -> List[int]:
        seen: List[int] = []
        for s in self.segments:
            if s.task_id is not None and s.task_id not in seen:
                seen.append(s.task_id)
        return seen

    @cached_property
    def _series(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.segments:
            s = self.start_state
            return (
                np.array([self.t0]),
                np.array([s.as_tuple()], dtype=np.float64),
                np.zeros(1),
            )
        times, states, energy = [], [], []
        offset = 0.0
        for k, seg in enumerate(self.segments):
            lo = 0 if k == 0 else 1
            times.append(seg.times[lo:])
            states.append(seg.result.states[lo:])
            energy.append(offset + seg.result.cumulative_energy[lo:])
            offset += seg.energy
        return np.concatenate(times), np.concatenate(states), np.concatenate(energy)

    def _clamp(self, t: Any) -> Any:
        return np.minimum(t, self.t_stop) if self.t_stop is not None else t

    def is_active(self, t: float) -> bool:
        return bool(self.segments) and self.t0 <= t <= self.t_end

    def positions_at(self, ts: np.ndarray) -> np.ndarray:
        times, states, _ = self._series
        ts = self._clamp(np.asarray(ts, dtype=np.float64))
        return np.column_stack(
            [np.interp(ts, times, states[:, 0]), np.interp(ts, times, states[:, 1])]
        )

    def position_at(self, t: float) -> Point:
        x, y = self.positions_at(np.array([t]))[0]
        return (float(x), float(y))

    def state_at(self, t: float) -> RobotState:
        times, states, _ = self._series
        t = float(self._clamp(t))
        x, y, psi, v, soc = (float(np.interp(t, times, states[:, i])) for i in range(5))
        return RobotState(x, y, psi, max(v, 0.0), min(max(soc, 0.0), 1.0))

    def cumulative_energy_at(self, t: float) -> float:
        times, _, energy = self._series
        t = float(self._clamp(t))
        return float(np.interp(t, times, energy))

    def segment_index_at(self, t: float) -> Optional[int]:
        """Index of the phase in progress at ``t``; None when idle or parked."""
        if self.t_stop is not None and t >= self.t_stop:
            return None
        for k, seg in enumerate(self.segments):
            if seg.t_start <= t < seg.t_end:
                return k
        return None

    def halted(self, t: float) -> "RouteTrajectory":
        return replace(self, t_stop=t)

    def to_frame(self) -> pd.DataFrame:
        frames = []
        for seg in self.segments:
            frame = seg.result.to_frame()
            frame["t"] += seg.t_start
            frame.insert(0, "phase", seg.index)
            frames.append(frame)
        if not frames:
            return pd.DataFrame(columns=["robot", "phase"])
        out = pd.concat(frames, ignore_index=True)
        if self.t_stop is not None:
            out = out[out["t"] <= self.t_stop]
        out.insert(0, "robot", self.robot_id)
        return out

    def summary_frame(self) -> pd.DataFrame:
        rows = [
            {
                "robot": self.robot_id,
                "phase": seg.index,
                "kind": seg.kind.value if seg.kind is not None else None,
                "task": seg.task_id,
                "dubins_length": seg.dubins_length,
                "duration": seg.duration,
                "energy": seg.energy,
                "objective": seg.objective,
                "nominal_objective": seg.nominal_objective,
            }
            for seg in self.segments
        ]
        return pd.DataFrame(
            rows,
            columns=[
                "robot",
                "phase",
                "kind",
                "task",
                "dubins_length",
                "duration",
                "energy",
                "objective",
                "nominal_objective",
            ],
        )


def waypoint_poses(
    start: Point, waypoints: Sequence[Waypoint], start_heading: float, tol: float
) -> List[Pose]:
    """Headings at waypoints: bearing toward the next distinct waypoint, or
    the arrival bearing at the last one."""
    points = [start] + [w.point for w in waypoints]
    poses = []
    for k in range(1, len(points)):
        here = points[k]
        heading = None
        for nxt in points[k + 1 :]:
            if distance(here, nxt) > tol:
                heading = bearing(here, nxt)
                break
        if heading is None:
            for prev in reversed(points[:k]):
                if distance(prev, here) > tol:
                    heading = bearing(prev, here)
                    break
        poses.append((here[0], here[1], start_heading if heading is None else heading))
    return poses


def plan_route(
    context: PlanContext,
    start_state: RobotState,
    waypoints: Sequence[Waypoint],
    t0: float = 0.0,
    first_index: int = 0,
    payloads: Optional[Mapping[Optional[int], float]] = None,
) -> Tuple[List[SegmentPlan], Optional[BatteryDepletionError]]:
    """Chain phases through ``waypoints`` (the start position excluded).

    Returns the planned segments and, on depletion, the error; the segments
    then hold everything realized before the fault.
    """
    if context.workspace is not None:
        for w in waypoints:
            context.workspace.check_waypoint(w.point)
    payloads = payloads or {}
    poses = waypoint_poses(
        start_state.position,
        waypoints,
        start_state.heading,
        context.options.position_tol,
    )
    segments: List[SegmentPlan] = []
    state, t = start_state, t0
    for k, (w, pose) in enumerate(zip(waypoints, poses)):
        payload = payloads.get(w.task_id, 0.0) if w.kind == PhaseKind.LOADED else 0.0
        try:
            seg = plan_phase(
                state,
                pose,
                context,
                kind=w.kind,
                task_id=w.task_id,
                payload=payload,
                index=first_index + k,
                t_start=t,
            )
        except BatteryDepletionError as e:
            return segments, e
        segments.append(seg)
        state, t = seg.end_state, seg.t_end
        if context.options.verbose:
            print(
                "phase {:3d}: DL={:7.3f} m  T={:6.2f} s  E={:9.2f} J".format(
                    seg.index, seg.dubins_length, seg.duration, seg.energy
                )
            )
    return segments, None


def optimize_route(
    depot: Point,
    sequence: Sequence[Task],
    params: RobotParams = RobotParams(),
    battery: BatteryParams = BatteryParams(),
    field: Union[FrictionField, float] = FrictionField(),
    weights: CostWeights = CostWeights(),
    options: Optional[TrajectoryOptions] = None,
    workspace: Optional[Workspace] = None,
    start_state: Optional[RobotState] = None,
    t0: float = 0.0,
    return_to_depot: bool = True,
    robot_id: int = 0,
) -> RouteTrajectory:
    """Energy-optimised trajectory through a task sequence.

    Raises
    ------
    InfeasibleWaypointError
        A waypoint lies outside ``workspace`` or inside a keep-out.
    BatteryDepletionError
        SOC ran out mid-route; ``partial`` is the route realized so far.
    """
    depot = check_point(depot, "depot")
    if not isinstance(field, FrictionField):
        field = FrictionField.uniform(field)
    context = PlanContext(
        params, battery, field, weights, options or TrajectoryOptions(), workspace
    )
    if start_state is None:
        start_state = RobotState(depot[0], depot[1], 0.0, 0.0, battery.soc_max)
    waypoints = waypoint_list(start_state.position, sequence, False)[1:]
    if return_to_depot and sequence:
        waypoints.append(Waypoint(depot, PhaseKind.UNLOADED, None))
    payloads = {t.id: params.check_payload(t.payload) for t in sequence}
    segments, error = plan_route(context, start_state, waypoints, t0, 0, payloads)
    route = RouteTrajectory(robot_id, start_state, t0, segments, context, depot)
    if error is not None:
        raise BatteryDepletionError(
            "Robot {} depleted its battery: {}".format(robot_id, error), partial=route
        )
    return route


def extend_route(
    route: RouteTrajectory,
    keep: int,
    sequence: Sequence[Task],
    return_to_depot: bool = True,
    t_resume: Optional[float] = None,
) -> RouteTrajectory:
    """Keep the first ``keep`` phases of ``route`` and re-plan the rest
    through ``sequence`` from where they end.

    The new phases start when the kept ones end, or at ``t_resume`` if that
    is later; the robot waits in place meanwhile.
    """
    kept = list(route.segments[:keep])
    if kept:
        state, t = kept[-1].end_state, kept[-1].t_end
    else:
        state, t = route.start_state, route.t0
    if t_resume is not None:
        t = max(t, t_resume)
    waypoints = waypoint_list(state.position, sequence, False)[1:]
    if return_to_depot and (sequence or kept):
        if distance(state.position, route.depot) > route.context.options.position_tol:
            waypoints.append(Waypoint(route.depot, PhaseKind.UNLOADED, None))
    payloads = {task.id: task.payload for task in sequence}
    segments, error = plan_route(route.context, state, waypoints, t, keep, payloads)
    new_route = replace(route, segments=kept + segments, t_stop=None)
    if error is not None:
        raise BatteryDepletionError(
            "Robot {} depleted its battery: {}".format(route.robot_id, error),
            partial=new_route,
        )
    return new_route


@lru_cache(maxsize=65536)
def _pair_cost(
    a: Point,
    b: Point,
    payload: float,
    v_minus: float,
    v_plus: float,
    context: PlanContext,
) -> float:
    psi = bearing(a, b)
    start = RobotState(a[0], a[1], psi, v_minus, context.battery.soc_max)
    seg = plan_phase(
        start,
        (b[0], b[1], psi),
        context,
        payload=payload,
        boundary=(v_minus, v_plus),
        path=straight_path(a, b),
    )
    return seg.objective


def ordered_pair_cost(
    a: Point,
    b: Point,
    payload: float,
    v_minus: float,
    v_plus: float,
    params: RobotParams = RobotParams(),
    battery: BatteryParams = BatteryParams(),
    field: Union[FrictionField, float] = FrictionField(),
    weights: CostWeights = CostWeights(),
    options: Optional[TrajectoryOptions] = None,
) -> float:
    """Optimised objective of a single straight phase ``a -> b`` with
    boundary speeds ``v_minus`` and ``v_plus``. Memoised."""
    a, b = check_point(a, "a"), check_point(b, "b")
    payload = params.check_payload(payload)
    for name, v in (("v_minus", v_minus), ("v_plus", v_plus)):
        v = check_nonnegative(v, name)
        if v > params.v_max:
            raise ValueError("{} {} exceeds v_max {}".format(name, v, params.v_max))
    if a == b and v_minus == 0.0 and v_plus == 0.0:
        return 0.0
    if not isinstance(field, FrictionField):
        field = FrictionField.uniform(field)
    options = options or TrajectoryOptions()
    context = PlanContext(params, battery, field, weights, options)
    return _pair_cost(a, b, float(payload), float(v_minus), float(v_plus), context)


def oracle_pair_cost(context: PlanContext) -> PairCost:
    """Pair cost ``(position, task) -> J`` from two optimised phases."""

    def cost(position: Point, task: Task) -> float:
        args = (
            context.params,
            context.battery,
            context.friction,
            context.weights,
            context.options,
        )
        unloaded = ordered_pair_cost(position, task.pickup, 0.0, 0.0, 0.0, *args)
        loaded = ordered_pair_cost(
            task.pickup, task.dropoff, task.payload, 0.0, 0.0, *args
        )
        return unloaded + loaded

    return cost
