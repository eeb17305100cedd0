import argparse

import pandas as pd

import amrfleet as af


def run_once(n_robots, n_tasks, seed, args, dry_run=False):
    spec = af.ScenarioSpec(
        n_robots=n_robots,
        n_tasks=2 if dry_run else n_tasks,
        station_count=max(25, n_robots),
        seed=seed,
    )
    scenario = af.generate_scenario(spec)
    options = af.TrajectoryOptions(dt=args.dt, max_iter=1 if dry_run else args.max_iter)
    pipeline = af.FleetPipeline(
        metric=args.bid_metric, options=options, simulate=False, n_jobs=args.n_jobs
    ).fit(scenario)
    return pipeline.timings_


def benchmark(args):
    task_counts = [int(m) for m in args.task_counts.split(",")]
    # warm up imports and caches
    run_once(args.robots, 2, 0, args, True)
    dfs = []
    for m in task_counts:
        for j in range(args.repeats):
            timings = run_once(args.robots, m, j, args)
            dfs.append(
                pd.DataFrame(
                    {
                        "n_robots": args.robots,
                        "n_tasks": m,
                        "seed": j,
                        "bid_metric": args.bid_metric,
                        **timings.to_dict(),
                    },
                    index=[0],
                )
            )
    df = pd.concat(dfs, ignore_index=True)
    print(df.groupby("n_tasks").mean(numeric_only=True))
    df.to_csv(args.output)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--robots", type=int, default=10, help="Fleet size")
    parser.add_argument(
        "--task_counts",
        type=str,
        default="10,20,50,100",
        help="Comma separated list of task counts.",
    )
    parser.add_argument(
        "--bid_metric",
        type=str,
        default="energy",
        help="Bid metric. Can be 'energy', 'distance', 'zoned'.",
    )
    parser.add_argument(
        "--dt", type=float, default=0.01, help="Trajectory integration step"
    )
    parser.add_argument(
        "--max_iter", type=int, default=6, help="Optimiser sweeps per phase"
    )
    parser.add_argument(
        "--n_jobs", type=int, default=None, help="Workers for route planning"
    )
    parser.add_argument(
        "--repeats",
        type=int,
        default=3,
        help="Number of seeds per task count.",
    )
    parser.add_argument(
        "--output",
        type=str,
        default="computation.csv",
        help="Output file name.",
    )
    args = parser.parse_args()
    benchmark(args)


if __name__ == "__main__":
    main()
