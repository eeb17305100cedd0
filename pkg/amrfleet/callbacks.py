from abc import ABC
from typing import TYPE_CHECKING, List, Tuple

from .rescheduler import CostToGo, EventLogEntry

if TYPE_CHECKING:
    from .simulation import FleetSimulator, SimulationResult


class SimulationCallback(ABC):
    """Interface for simulation callback."""

    def __init__(self) -> None:
        pass

    def before_simulation(self, sim: "FleetSimulator") -> None:
        """Run before the clock starts."""
        pass

    def after_simulation(
        self, sim: "FleetSimulator", result: "SimulationResult"
    ) -> None:
        """Run after the last robot stopped."""
        pass

    def on_checkpoint(
        self, sim: "FleetSimulator", t: float, cost_to_go: CostToGo
    ) -> None:
        """Run at every monitoring tick.

        Parameters
        ----------

        sim :
            The running simulator.
        t :
            Simulated time in seconds.
        cost_to_go :
            Predicted remaining cost at ``t``.
        """
        pass

    def after_reschedule(self, sim: "FleetSimulator", entry: EventLogEntry) -> None:
        """Run after every reschedule with its log entry."""
        pass


class CostToGoMonitor(SimulationCallback):
    """Records the cost-to-go at every checkpoint and counts the
    checkpoints where it grew.

    Growth is expected after a priority task arrives; between events the
    cost-to-go should not increase by more than ``tol`` relative.

    Args:
        tol (float): Relative growth tolerated between two checkpoints.
        verbose (bool): Print every increase.

    Raises:
        ValueError: If `tol` is less than 0.
    """

    def __init__(self, tol: float = 1e-6, verbose: bool = False) -> None:
        super().__init__()
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        self.tol = tol
        self.verbose = verbose

    def before_simulation(self, sim: "FleetSimulator") -> None:
        self.history: List[Tuple[float, float]] = []
        self.increases: List[Tuple[float, float, float]] = []
        self._arrival = False

    def after_reschedule(self, sim: "FleetSimulator", entry: EventLogEntry) -> None:
        if entry.kind in ("priority_task", "combined"):
            self._arrival = True

    def on_checkpoint(
        self, sim: "FleetSimulator", t: float, cost_to_go: CostToGo
    ) -> None:
        value = cost_to_go.value
        if self.history and not self._arrival:
            _, previous = self.history[-1]
            if value > previous + self.tol * max(abs(previous), 1.0):
                self.increases.append((t, previous, value))
                if self.verbose:
                    print(
                        "[t={:8.2f}] cost-to-go grew {:.3f} -> {:.3f}".format(
                            t, previous, value
                        )
                    )
        self.history.append((t, value))
        self._arrival = False


class EventPrinter(SimulationCallback):
    """Prints every reschedule and a summary at the end."""

    def after_reschedule(self, sim: "FleetSimulator", entry: EventLogEntry) -> None:
        print(entry)

    def after_simulation(
        self, sim: "FleetSimulator", result: "SimulationResult"
    ) -> None:
        print(result)
