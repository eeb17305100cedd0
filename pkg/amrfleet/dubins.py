"""Shortest curvature-bounded paths between planar poses."""
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from typing_extensions import TypeAlias

from .input_validation import check_finite, check_positive

Pose: TypeAlias = Tuple[float, float, float]
WordFn: TypeAlias = Callable[
    [float, float, float], Optional[Tuple[float, float, float]]
]

# negative p^2 above this is rounding noise on a tangent configuration
_P2_TOL = 1e-12


def mod2pi(theta: float) -> float:
    return theta - 2.0 * math.pi * math.floor(theta / (2.0 * math.pi))


def wrap_angle(theta: float) -> float:
    """Wrap to ``(-pi, pi]``."""
    return math.pi - mod2pi(math.pi - theta)


def _sqrt_clamped(p2: float) -> Optional[float]:
    if p2 < 0.0:
        if p2 < -_P2_TOL:
            return None
        p2 = 0.0
    return math.sqrt(p2)


def _lsl(a: float, b: float, d: float) -> Optional[Tuple[float, float, float]]:
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    p = _sqrt_clamped(2.0 + d * d - 2.0 * math.cos(a - b) + 2.0 * d * (sa - sb))
    if p is None:
        return None
    tmp = math.atan2(cb - ca, d + sa - sb)
    return mod2pi(tmp - a), p, mod2pi(b - tmp)


def _rsr(a: float, b: float, d: float) -> Optional[Tuple[float, float, float]]:
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    p = _sqrt_clamped(2.0 + d * d - 2.0 * math.cos(a - b) + 2.0 * d * (sb - sa))
    if p is None:
        return None
    tmp = math.atan2(ca - cb, d - sa + sb)
    return mod2pi(a - tmp), p, mod2pi(tmp - b)


def _lsr(a: float, b: float, d: float) -> Optional[Tuple[float, float, float]]:
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    p = _sqrt_clamped(-2.0 + d * d + 2.0 * math.cos(a - b) + 2.0 * d * (sa + sb))
    if p is None:
        return None
    tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
    return mod2pi(tmp - a), p, mod2pi(tmp - b)


def _rsl(a: float, b: float, d: float) -> Optional[Tuple[float, float, float]]:
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    p = _sqrt_clamped(-2.0 + d * d + 2.0 * math.cos(a - b) - 2.0 * d * (sa + sb))
    if p is None:
        return None
    tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    return mod2pi(a - tmp), p, mod2pi(b - tmp)


def _rlr(a: float, b: float, d: float) -> Optional[Tuple[float, float, float]]:
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    tmp = (6.0 - d * d + 2.0 * math.cos(a - b) + 2.0 * d * (sa - sb)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = mod2pi(2.0 * math.pi - math.acos(tmp))
    t = mod2pi(a - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
    return t, p, mod2pi(a - b - t + p)


def _lrl(a: float, b: float, d: float) -> Optional[Tuple[float, float, float]]:
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    tmp = (6.0 - d * d + 2.0 * math.cos(a - b) + 2.0 * d * (sb - sa)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = mod2pi(2.0 * math.pi - math.acos(tmp))
    t = mod2pi(-a - math.atan2(ca - cb, d + sa - sb) + p / 2.0)
    return t, p, mod2pi(b - a - t + p)


WORDS: Dict[str, WordFn] = {
    "LSL": _lsl,
    "RSR": _rsr,
    "LSR": _lsr,
    "RSL": _rsl,
    "RLR": _rlr,
    "LRL": _lrl,
}


@dataclass(frozen=True)
class DubinsConfig:
    pose: Pose
    turn_radius: float

    def __post_init__(self) -> None:
        pose = tuple(check_finite(v, "pose") for v in self.pose)
        if len(pose) != 3:
            raise ValueError("pose must be (x, y, heading), got {}".format(self.pose))
        object.__setattr__(self, "pose", pose)
        check_positive(self.turn_radius, "turn_radius")


def _advance(pose: Pose, kind: str, length: float, rho: float) -> Pose:
    x, y, psi = pose
    if kind == "S":
        return (x + length * math.cos(psi), y + length * math.sin(psi), psi)
    phi = length / rho
    if kind == "L":
        return (
            x + rho * (math.sin(psi + phi) - math.sin(psi)),
            y - rho * (math.cos(psi + phi) - math.cos(psi)),
            psi + phi,
        )
    return (
        x - rho * (math.sin(psi - phi) - math.sin(psi)),
        y + rho * (math.cos(psi - phi) - math.cos(psi)),
        psi - phi,
    )


@dataclass(frozen=True)
class DubinsPath:
    """One Dubins word anchored at a start pose.

    ``segments`` are arc lengths in metres of the three primitives of
    ``word``.
    """

    start: Pose
    word: str
    segments: Tuple[float, float, float]
    turn_radius: float

    @property
    def length(self) -> float:
        return float(sum(self.segments))

    @property
    def end(self) -> Pose:
        return self.pose_at(self.length)

    def _locate(self, s: float) -> Tuple[Pose, str, float]:
        pose = self.start
        s = min(max(s, 0.0), self.length)
        for kind, seg in zip(self.word, self.segments):
            if s <= seg and seg > 0.0:
                return pose, kind, s
            pose = _advance(pose, kind, seg, self.turn_radius)
            s -= seg
        return pose, self.word[-1], 0.0

    def pose_at(self, s: float) -> Pose:
        """Pose after travelling ``s`` metres, clamped to the path ends."""
        pose, kind, rest = self._locate(s)
        return _advance(pose, kind, rest, self.turn_radius)

    def curvature_at(self, s: float) -> float:
        _, kind, _ = self._locate(s)
        if kind == "S" or self.length == 0.0:
            return 0.0
        return (1.0 if kind == "L" else -1.0) / self.turn_radius

    def sample(self, step: float = 0.05) -> np.ndarray:
        """Poses at arc-length spacing of at most ``step``, both ends
        included; shape (N, 3)."""
        n = max(int(math.ceil(self.length / step)), 1)
        return np.array([self.pose_at(s) for s in np.linspace(0.0, self.length, n + 1)])


def straight_path(a: Tuple[float, float], b: Tuple[float, float]) -> DubinsPath:
    """Straight line from ``a`` to ``b`` travelled along the bearing."""
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    psi = math.atan2(b[1] - a[1], b[0] - a[0]) if length > 0.0 else 0.0
    return DubinsPath((a[0], a[1], psi), "LSL", (0.0, length, 0.0), 1.0)


def dubins_words(a: Pose, b: Pose, turn_radius: float) -> List[DubinsPath]:
    """Every feasible word from ``a`` to ``b``, shortest first."""
    rho = check_positive(turn_radius, "turn_radius")
    dx, dy = b[0] - a[0], b[1] - a[1]
    D = math.hypot(dx, dy)
    if D == 0.0 and mod2pi(b[2] - a[2]) == 0.0:
        return [DubinsPath(a, "LSL", (0.0, 0.0, 0.0), rho)]
    theta = mod2pi(math.atan2(dy, dx)) if D > 0.0 else 0.0
    alpha = mod2pi(a[2] - theta)
    beta = mod2pi(b[2] - theta)
    d = D / rho
    paths = []
    for word, fn in WORDS.items():
        result = fn(alpha, beta, d)
        if result is not None:
            lengths = tuple(v * rho for v in result)
            paths.append(DubinsPath(a, word, lengths, rho))  # type: ignore[arg-type]
    # stable sort keeps the word order above for equal lengths
    paths.sort(key=lambda p: p.length)
    return paths


def shortest_path(
    a: Pose,
    b: Pose,
    turn_radius: float,
    admissible: Optional[Callable[[DubinsPath], bool]] = None,
) -> DubinsPath:
    """Shortest word satisfying ``admissible``.

    Falls back to the unconstrained shortest word with a warning when no word
    is admissible.
    """
    paths = dubins_words(a, b, turn_radius)
    if not paths:
        raise ValueError("No Dubins word between {} and {}".format(a, b))
    if admissible is None:
        return paths[0]
    for path in paths:
        if admissible(path):
            return path
    warnings.warn(
        "No admissible Dubins word from {} to {}; using the shortest".format(a, b)
    )
    return paths[0]


def dubins_length(a: DubinsConfig, b: DubinsConfig) -> float:
    """Length of the shortest of the six Dubins words between two poses."""
    if a.turn_radius != b.turn_radius:
        raise ValueError(
            "Poses must share a turning radius, got {} and {}".format(
                a.turn_radius, b.turn_radius
            )
        )
    return dubins_words(a.pose, b.pose, a.turn_radius)[0].length
