"""Command line entry points.

``python -m amrfleet <command>`` with commands ``generate``, ``run``,
``sweep``, ``stats`` and ``trace``. Every amrfleet fault exits with status 1
and a one-line message on stderr.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .bids import bid_metrics
from .domain import LayoutKind
from .pipeline import FleetPipeline
from .scenario import (
    DepotLayout,
    Scenario,
    ScenarioSpec,
    generate_scenario,
    load_events,
    load_scenario,
    save_scenario,
)
from .simulation import RescheduleMode
from .stats import paired_wilcoxon
from .sweep import SweepConfig, sweep
from .trajectory import TrajectoryOptions

FAULTS = (ValueError, RuntimeError, FloatingPointError, OSError, KeyError)


def _parse_seeds(value: str) -> List[int]:
    """``5`` means seeds 0..4; ``0,3,7`` lists them."""
    if "," in value:
        return [int(s) for s in value.split(",") if s.strip()]
    count = int(value)
    if count < 1:
        raise argparse.ArgumentTypeError("--seeds must be >= 1")
    return list(range(count))


def _spec_from_args(args: argparse.Namespace) -> ScenarioSpec:
    return ScenarioSpec(
        n_robots=args.robots,
        n_tasks=args.tasks,
        layout=LayoutKind(args.layout),
        width=args.width,
        height=args.height,
        station_count=args.stations,
        mu_range=(args.mu_lo, args.mu_hi if args.mu_hi is not None else args.mu_lo),
        zone_grid=args.zone_grid,
        fault_rate=args.fault_rate,
        priority_rate=args.priority_rate,
        deviation_rate=args.deviation_rate,
        horizon=args.horizon,
        depot_layout=DepotLayout(args.depots),
        seed=args.seed,
    )


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    if args.scenario is not None:
        return load_scenario(args.scenario)
    return generate_scenario(_spec_from_args(args))


def _options_from_args(args: argparse.Namespace) -> TrajectoryOptions:
    return TrajectoryOptions(dt=args.dt, opt_dt=args.opt_dt, max_iter=args.max_iter)


def _write_json(path: Path, data: Dict[str, Any]) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str))


def generate(args: argparse.Namespace) -> int:
    scenario = generate_scenario(_spec_from_args(args))
    save_scenario(scenario, args.out)
    if args.verbose:
        print(
            "wrote {}: {} robots, {} tasks, {} events".format(
                args.out,
                len(scenario.robots),
                len(scenario.tasks),
                len(scenario.events),
            )
        )
    return 0


def run(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    events = None if args.disruptions is None else load_events(args.disruptions)
    pipeline = FleetPipeline(
        allocator=args.allocator,
        metric=args.bid_metric,
        execution=args.execution,
        options=_options_from_args(args),
        mode=args.mode,
        n_jobs=args.n_jobs,
        verbose=args.verbose,
    ).fit(scenario, events)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim = pipeline.simulation_
    assert sim is not None
    summary = dict(pipeline.report())
    summary["seed"] = scenario.seed
    summary["bid_metric"] = args.bid_metric
    summary["served_tasks"] = sim.served
    summary["unserved_tasks"] = sim.unserved
    summary["robot_energy"] = {str(k): v for k, v in sim.robot_energy.items()}
    _write_json(out / "summary.json", summary)
    sim.event_log.to_frame().to_csv(out / "events.csv", index=False)
    phases = [sim.routes[i].summary_frame() for i in sorted(sim.routes)]
    pd.concat(phases, ignore_index=True).to_csv(out / "phases.csv", index=False)
    sim.energy_series.to_csv(out / "energy_series.csv", index=False)
    if pipeline.trace_ is not None:
        pipeline.trace_.to_frame().to_csv(out / "auction_trace.csv", index=False)
    print(sim)
    return 0


def sweep_command(args: argparse.Namespace) -> int:
    data: Dict[str, Any] = {}
    if args.config is not None:
        data = json.loads(Path(args.config).read_text())
    if args.seeds is not None:
        data["seeds"] = args.seeds
    if args.n_jobs is not None:
        data["n_jobs"] = args.n_jobs
    config = SweepConfig.from_dict(data)
    result = sweep(config, verbose=args.verbose)
    out = Path(args.out_dir)
    result.save(out)
    _write_json(out / "config.json", config.to_dict())
    print(result)
    return 0


def stats_command(args: argparse.Namespace) -> int:
    left = pd.read_csv(args.left)
    right = pd.read_csv(args.right)
    on = args.on.split(",") if args.on else None
    print(paired_wilcoxon(left, right, args.column, on, args.method))
    return 0


def trace(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    pipeline = FleetPipeline(
        allocator=args.allocator,
        metric=args.bid_metric,
        execution=args.execution,
        options=_options_from_args(args),
        simulate=False,
        n_jobs=args.n_jobs,
        verbose=args.verbose,
    ).fit(scenario)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for robot_id, route in sorted(pipeline.routes_.items()):
        route.to_frame().to_csv(out / "robot_{}.csv".format(robot_id), index=False)
    if pipeline.trace_ is not None:
        pipeline.trace_.to_frame().to_csv(out / "auction_trace.csv", index=False)
    pipeline.schedule_.to_frame().to_csv(out / "schedule.csv", index=False)
    return 0


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--robots", type=int, default=4, help="Fleet size")
    parser.add_argument("--tasks", type=int, default=20, help="Number of tasks")
    parser.add_argument(
        "--layout",
        type=str,
        default="clustered",
        choices=[k.value for k in LayoutKind],
        help="Station layout",
    )
    parser.add_argument("--width", type=float, default=20.0, help="Workspace width")
    parser.add_argument("--height", type=float, default=20.0, help="Workspace height")
    parser.add_argument("--stations", type=int, default=25, help="Station count")
    parser.add_argument(
        "--mu-lo", type=float, default=0.02, help="Lowest rolling friction"
    )
    parser.add_argument(
        "--mu-hi",
        type=float,
        default=None,
        help="Highest rolling friction; zoned friction when above --mu-lo",
    )
    parser.add_argument(
        "--zone-grid", type=int, default=2, help="Friction zones per side"
    )
    parser.add_argument(
        "--depots",
        type=str,
        default="stations",
        choices=[k.value for k in DepotLayout],
        help="Robot start positions",
    )
    parser.add_argument("--fault-rate", type=float, default=0.0)
    parser.add_argument("--priority-rate", type=float, default=0.0)
    parser.add_argument("--deviation-rate", type=float, default=0.0)
    parser.add_argument(
        "--horizon", type=float, default=300.0, help="Disruption horizon in seconds"
    )
    parser.add_argument("--seed", type=int, default=0, help="Scenario seed")


def _add_plan_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        type=str,
        default=None,
        help="Scenario file; generated from the scenario flags when omitted",
    )
    parser.add_argument(
        "--bid-metric",
        type=str,
        default="energy",
        choices=sorted(bid_metrics),
        help="Bid metric of the auction and of rescheduling",
    )
    parser.add_argument(
        "--allocator",
        type=str,
        default="auction",
        help="Allocator: auction, nearest_task, nearest_robot or enumeration",
    )
    parser.add_argument(
        "--execution",
        type=str,
        default="ocp",
        choices=["ocp", "const_velocity"],
        help="Motion execution model",
    )
    parser.add_argument("--dt", type=float, default=0.01, help="Trajectory step")
    parser.add_argument(
        "--opt-dt", type=float, default=0.05, help="Optimiser scoring step"
    )
    parser.add_argument(
        "--max-iter", type=int, default=6, help="Optimiser sweeps per phase"
    )
    parser.add_argument(
        "--n-jobs",
        type=int,
        default=None,
        help="Worker budget; defaults to AMRFLEET_N_JOBS",
    )
    _add_scenario_args(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amrfleet", description="Energy-aware fleet allocation experiments"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("generate", help="Write a scenario file")
    _add_scenario_args(p)
    p.add_argument("--out", type=str, default="scenario.json")
    p.set_defaults(func=generate)

    p = commands.add_parser("run", help="Run one pipeline")
    _add_plan_args(p)
    p.add_argument(
        "--disruptions",
        type=str,
        default=None,
        help="JSON disruption stream replacing the scenario's own",
    )
    p.add_argument(
        "--mode",
        type=str,
        default="warm",
        choices=[m.value for m in RescheduleMode],
        help="Rescheduling mode",
    )
    p.add_argument("--out", type=str, default="run", help="Output directory")
    p.set_defaults(func=run)

    p = commands.add_parser("sweep", help="Run a seeded experiment grid")
    p.add_argument("--config", type=str, default=None, help="JSON grid file")
    p.add_argument(
        "--seeds",
        type=_parse_seeds,
        default=None,
        help="Seed count, or a comma separated list of seeds",
    )
    p.add_argument("--n-jobs", type=int, default=None)
    p.add_argument("--out-dir", type=str, default="sweep")
    p.set_defaults(func=sweep_command)

    p = commands.add_parser("stats", help="Wilcoxon test of two result tables")
    p.add_argument("left", type=str)
    p.add_argument("right", type=str)
    p.add_argument("--column", type=str, default="fleet_energy")
    p.add_argument(
        "--on", type=str, default=None, help="Comma separated key columns"
    )
    p.add_argument(
        "--method", type=str, default="auto", choices=["auto", "exact", "normal"]
    )
    p.set_defaults(func=stats_command)

    p = commands.add_parser("trace", help="Dump planned trajectories")
    _add_plan_args(p)
    p.add_argument("--out-dir", type=str, default="trace")
    p.set_defaults(func=trace)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except FAULTS as e:
        print("amrfleet: {}: {}".format(type(e).__name__, e), file=sys.stderr)
        return 1
