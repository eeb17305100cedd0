from .domain import (
    BatteryParams,
    CostWeights,
    LayoutKind,
    Rect,
    Robot,
    RobotParams,
    Schedule,
    Task,
    Workspace,
    validate_partition,
    waypoint_list,
)
from .energy import FrictionField, SegmentSpec, bid_energy_approx, segment_energy
from .physics import IntegrationResult, derivatives, integrate
from .trajectory import RouteTrajectory, TrajectoryOptions, optimize_route
from .collision import detect_conflicts, refine
from .bids import AuctionContext, BaseBidMetric, bid, bid_metrics
from .allocators import (
    BaseAllocator,
    BaselineKind,
    Enumeration,
    NearestRobot,
    NearestTask,
    NearestTaskRule,
    SequentialAuction,
    allocators,
    run_auction,
)
from .rescheduler import (
    DisruptionEvent,
    DisruptionKind,
    EventLog,
    TriggerConfig,
    cold_reschedule,
    evaluate_triggers,
    warm_start_reschedule,
    zeno_budget,
)
from .simulation import FleetSimulator, SimulationResult
from .callbacks import CostToGoMonitor, EventPrinter, SimulationCallback
from .scenario import DepotLayout, Scenario, ScenarioSpec, generate_scenario
from .stats import wilcoxon_signed_rank
from .metrics import MetricsReport
from .pipeline import FleetPipeline, run_pipeline
from .sweep import SweepConfig, sweep
