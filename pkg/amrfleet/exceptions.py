from typing import Any, Sequence, Tuple


class InfeasibleWaypointError(ValueError):
    """A waypoint lies outside the workspace or inside a keep-out region."""

    def __init__(self, waypoint: Tuple[float, float], reason: str) -> None:
        self.waypoint = waypoint
        super().__init__(
            "Infeasible waypoint ({:.3f}, {:.3f}): {}".format(
                waypoint[0], waypoint[1], reason
            )
        )


class BatteryDepletionError(RuntimeError):
    """State of charge fell below the battery's lower bound.

    ``partial`` holds whatever was computed up to the fault, an
    :class:`~amrfleet.physics.IntegrationResult` when raised by the integrator
    and a :class:`~amrfleet.trajectory.RouteTrajectory` when raised while
    planning a route.
    """

    def __init__(self, message: str, partial: Any = None) -> None:
        self.partial = partial
        super().__init__(message)


class ModelBlowUpError(FloatingPointError):
    """Non-finite state or derivative produced by the robot model."""


class RescheduleInfeasibleError(RuntimeError):
    """Tasks remain but no robot is able to take them."""

    def __init__(self, orphan_tasks: Sequence[int]) -> None:
        self.orphan_tasks = tuple(orphan_tasks)
        super().__init__(
            "No available robot for tasks: {}".format(list(self.orphan_tasks))
        )


class SizeGuardError(ValueError):
    """Instance exceeds the configured size of an exact oracle or enumeration."""


class DegenerateSampleError(ValueError):
    """Statistic undefined for the given sample (zero variance, all ties)."""


class ResidualConflictWarning(UserWarning):
    """Collision refinement finished with conflicts left."""
