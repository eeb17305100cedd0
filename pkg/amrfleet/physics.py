"""Forward model of one robot: kinematic bicycle, DC drive and battery."""
import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import expit
from typing_extensions import TypeAlias

from .domain import BatteryParams, ControlInput, CostWeights, RobotParams, RobotState
from .energy import GRAVITY, FrictionField
from .exceptions import BatteryDepletionError, ModelBlowUpError
from .input_validation import check_nonnegative, check_positive

# normalisation of the sigmoid argument in the power split
P0 = 1.0
# speed scale below which brake and rolling resistance fade out
V_EPS = 0.05

StateTuple: TypeAlias = Tuple[float, float, float, float, float]
ControlFn: TypeAlias = Callable[[float, StateTuple], ControlInput]
Friction: TypeAlias = Union[float, FrictionField]

DUMP_COLUMNS = [
    "t",
    "x",
    "y",
    "psi",
    "v",
    "soc",
    "steer",
    "voltage",
    "brake",
    "p_battery",
]


class PowerRecord(NamedTuple):
    t: float
    p_demand: float
    p_loss: float
    p_battery: float
    i_battery: float
    ocv: float


def power_split(p_demand: float, eta: float) -> Tuple[float, float]:
    """Split demanded electrical power into battery power and loss.

    Drawing power costs ``1/eta`` and regenerating returns ``eta``, blended by
    a sigmoid in ``p_demand / P0``.

    Returns
    -------
    (p_battery, p_loss)
    """
    x = p_demand / P0
    p_battery = float(
        p_demand * expit(x) / eta + p_demand * eta * expit(-x)
    )
    return p_battery, p_battery - p_demand


def motor_current(voltage: float, speed: float, params: RobotParams) -> float:
    return (
        voltage - params.motor_constant * speed / params.wheel_radius
    ) / params.motor_resistance


def steady_state_speed(
    voltage: float, params: RobotParams, payload: float = 0.0, mu: float = 0.0
) -> float:
    """Speed at which motor torque balances rolling resistance."""
    tau_rr = mu * (params.mass + payload) * GRAVITY * params.wheel_radius
    k = params.motor_constant
    return max(
        params.wheel_radius / k * (voltage - params.motor_resistance * tau_rr / k), 0.0
    )


def _mu_at(friction: Friction, x: float, y: float) -> float:
    if isinstance(friction, FrictionField):
        return friction.mu_at((x, y))
    return friction


def _evaluate(
    s: StateTuple,
    u: ControlInput,
    params: RobotParams,
    battery: BatteryParams,
    payload: float,
    mu: float,
) -> Tuple[StateTuple, float, float, float, float]:
    x, y, psi, v, soc = s
    steer, voltage, brake = u
    r = params.wheel_radius
    i = (voltage - params.motor_constant * v / r) / params.motor_resistance
    tau_m = params.motor_constant * i
    fade = math.tanh(v / V_EPS)
    tau_rr = mu * (params.mass + payload) * GRAVITY * r * fade
    m = params.mass + payload
    v_dot = (tau_m - brake * fade - tau_rr) / (m * r + params.motor_inertia / r)
    psi_dot = v * math.tan(steer) / params.wheelbase
    p_demand = tau_m * v / r + i * i * params.motor_resistance
    p_battery, _ = power_split(p_demand, params.efficiency)
    ocv = float(battery.ocv(soc))
    i_battery = p_battery / ocv
    d = (
        v * math.cos(psi),
        v * math.sin(psi),
        psi_dot,
        v_dot,
        -i_battery / battery.capacity,
    )
    if not all(math.isfinite(value) for value in d):
        raise ModelBlowUpError(
            "Non-finite derivative at state {} control {}".format(s, tuple(u))
        )
    return d, p_demand, p_battery, i_battery, ocv


def derivatives(
    state: Union[RobotState, StateTuple],
    control: ControlInput,
    params: RobotParams,
    battery: BatteryParams,
    payload: float = 0.0,
    friction: Friction = 0.0,
) -> np.ndarray:
    """Time derivative ``[x', y', psi', v', soc']`` of the robot state.

    With ``friction`` zero and positive speed the drive equation is
    ``v' = (tau_m - tau_b) / (m r_w + J_m / r_w)`` with ``m = M + payload``.
    Brake torque and rolling resistance fade with ``tanh(v / V_EPS)`` so that
    neither pushes a robot at rest backwards.
    """
    s = state.as_tuple() if isinstance(state, RobotState) else tuple(state)
    d, *_ = _evaluate(
        s,  # type: ignore[arg-type]
        ControlInput(*control),
        params,
        battery,
        payload,
        _mu_at(friction, s[0], s[1]),
    )
    return np.array(d, dtype=np.float64)


@dataclass
class IntegrationResult:
    """Samples of one fixed-step RK4 run.

    Attributes:
        t: Sample times, shape (N,).
        states: ``x, y, psi, v, soc`` per sample, shape (N, 5).
        controls: ``steer, voltage, brake`` per sample, shape (N, 3).
        power: ``p_demand, p_loss, p_battery, i_battery, ocv``, shape (N, 5).
        energy: Battery energy over the run in joules.
        objective: Integral of the weighted running cost.
        cumulative_energy: Battery energy up to each sample, shape (N,).
    """

    t: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    power: np.ndarray
    energy: float
    objective: float
    cumulative_energy: np.ndarray

    def __str__(self) -> str:
        return (
            "Integration Result:\n\tduration: {}\n\tsamples: {}\n\tenergy: {}"
            "\n\tobjective: {}".format(
                self.duration, len(self.t), self.energy, self.objective
            )
        )

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def final_state(self) -> RobotState:
        x, y, psi, v, soc = (float(a) for a in self.states[-1])
        return RobotState(x, y, psi, v, min(max(soc, 0.0), 1.0))

    def samples(self) -> List[Tuple[RobotState, ControlInput, PowerRecord]]:
        out = []
        for k in range(len(self.t)):
            x, y, psi, v, soc = (float(a) for a in self.states[k])
            out.append(
                (
                    RobotState(x, y, psi, v, min(max(soc, 0.0), 1.0)),
                    ControlInput(*(float(a) for a in self.controls[k])),
                    PowerRecord(float(self.t[k]), *(float(a) for a in self.power[k])),
                )
            )
        return out

    def to_frame(self) -> pd.DataFrame:
        data = np.column_stack(
            [self.t, self.states, self.controls, self.power[:, 2]]
        )
        return pd.DataFrame(data, columns=DUMP_COLUMNS)


def _truncate(
    t: List[float],
    states: List[StateTuple],
    controls: List[ControlInput],
    power: List[Tuple[float, ...]],
    cumulative: List[float],
    objective: float,
) -> IntegrationResult:
    return IntegrationResult(
        np.array(t),
        np.array(states, dtype=np.float64).reshape(-1, 5),
        np.array(controls, dtype=np.float64).reshape(-1, 3),
        np.array(power, dtype=np.float64).reshape(-1, 5),
        cumulative[-1],
        objective,
        np.array(cumulative),
    )


def integrate(
    state0: RobotState,
    control_fn: ControlFn,
    payload: float,
    t_span: Tuple[float, float],
    dt: float = 0.01,
    params: RobotParams = RobotParams(),
    battery: BatteryParams = BatteryParams(),
    friction: Friction = 0.0,
    weights: Optional[CostWeights] = None,
) -> IntegrationResult:
    """Integrate the robot model with fixed-step RK4.

    Controls are evaluated at every RK4 stage and clipped to the box of
    ``params``. Battery energy and the running cost
    ``w1 P_batt + w2 (soc_max - soc)^2 + w3 psi'^2`` are integrated as extra
    RK4 states. The final step is shortened to land on ``t_span[1]``.

    Raises
    ------
    BatteryDepletionError
        SOC fell below ``battery.soc_min``; ``partial`` holds the samples so
        far.
    ModelBlowUpError
        A derivative or state became non-finite.
    """
    dt = check_positive(dt, "dt")
    payload = check_nonnegative(payload, "payload")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 >= t0:
        raise ValueError("Empty time span: {}".format(t_span))
    weights = weights if weights is not None else CostWeights()
    w1, w2, w3 = weights.w1, weights.w2, weights.w3
    soc_max = battery.soc_max

    def stage(
        t: float, s: StateTuple
    ) -> Tuple[StateTuple, float, float, ControlInput, Tuple[float, ...]]:
        u = control_fn(t, s).clip(params)
        d, p_demand, p_batt, i_batt, ocv = _evaluate(
            s, u, params, battery, payload, _mu_at(friction, s[0], s[1])
        )
        running = w1 * p_batt + w2 * (soc_max - s[4]) ** 2 + w3 * d[2] ** 2
        record = (p_demand, p_batt - p_demand, p_batt, i_batt, ocv)
        return d, p_batt, running, u, record

    s: StateTuple = state0.as_tuple()
    t = t0
    n_steps = max(int(math.ceil((t1 - t0) / dt - 1e-9)), 0)
    d1, p1, l1, u, record = stage(t, s)
    ts, states, controls, power = [t], [s], [u], [record]
    cumulative = [0.0]
    energy = objective = 0.0
    for k in range(n_steps):
        h = min(dt, t1 - t)
        if k == n_steps - 1:
            h = t1 - t
        s2 = tuple(a + 0.5 * h * b for a, b in zip(s, d1))
        d2, p2, l2, _, _ = stage(t + 0.5 * h, s2)  # type: ignore[arg-type]
        s3 = tuple(a + 0.5 * h * b for a, b in zip(s, d2))
        d3, p3, l3, _, _ = stage(t + 0.5 * h, s3)  # type: ignore[arg-type]
        s4 = tuple(a + h * b for a, b in zip(s, d3))
        d4, p4, l4, _, _ = stage(t + h, s4)  # type: ignore[arg-type]
        x, y, psi, v, soc = (
            a + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(s, d1, d2, d3, d4)
        )
        energy += h / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
        objective += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        # speed governor keeps the state inside [0, v_max]
        s = (x, y, psi, min(max(v, 0.0), params.v_max), soc)
        t = t1 if k == n_steps - 1 else t0 + (k + 1) * dt
        if not all(math.isfinite(a) for a in s):
            raise ModelBlowUpError("Non-finite state {} at t={}".format(s, t))
        d1, p1, l1, u, record = stage(t, s)
        ts.append(t)
        states.append(s)
        controls.append(u)
        power.append(record)
        cumulative.append(energy)
        if soc < battery.soc_min:
            raise BatteryDepletionError(
                "SOC {:.4f} below soc_min {} at t={:.2f}".format(
                    soc, battery.soc_min, t
                ),
                partial=_truncate(ts, states, controls, power, cumulative, objective),
            )
    return _truncate(ts, states, controls, power, cumulative, objective)
