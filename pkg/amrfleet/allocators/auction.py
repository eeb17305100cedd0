"""Sequential single-item auction.

Every round each robot bids on every unassigned task from the end of its
current sequence; the globally cheapest bid wins, the task is appended to the
winner's sequence and the winner's end moves to the task's dropoff. A full
auction with ``n`` robots and ``m`` tasks evaluates ``n * m * (m + 1) / 2``
bids.
"""
import math
from dataclasses import dataclass, field
from typing import (
    Dict,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
import pandas as pd
from typing_extensions import override

from ..bids import AuctionContext, BaseBidMetric, BidMetricKind, get_metric
from ..domain import Point, Robot, Schedule, Task, robot_index
from .base_allocator import (
    BaseAllocator,
    build_schedule,
    check_allocation_input,
    start_positions_for,
)


class Bid(NamedTuple):
    value: float
    robot: int
    task: int


class AuctionRound(NamedTuple):
    round: int
    task: int
    winner: int
    winning_bid: float
    second_best_bid: float
    bids: Tuple[Bid, ...]


@dataclass
class AuctionTrace:
    """Record of every auction round.

    Attributes:
        rounds: One entry per assigned task, in assignment order.
        bid_count: Number of bid evaluations.
        metric: Name of the bid metric.
    """

    rounds: List[AuctionRound] = field(default_factory=list)
    bid_count: int = 0
    metric: str = ""

    @property
    def fleet_cost(self) -> float:
        """Sum of winning bids, the auction's own estimate of fleet cost."""
        return math.fsum(r.winning_bid for r in self.rounds)

    @property
    def mean_bid(self) -> float:
        values = [abs(b.value) for r in self.rounds for b in r.bids]
        return float(np.mean(values)) if values else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                (r.round, r.task, r.winner, r.winning_bid, r.second_best_bid)
                for r in self.rounds
            ],
            columns=["round", "task", "winner", "winning_bid", "second_best_bid"],
        )

    def __str__(self) -> str:
        return (
            "Auction Trace:\n\tmetric: {}\n\trounds: {}\n\tbid_count: {}"
            "\n\tfleet_cost: {}".format(
                self.metric, len(self.rounds), self.bid_count, self.fleet_cost
            )
        )


def select_winner(bids: Sequence[Bid], rel_tol: float = 1e-9) -> Bid:
    """Lowest bid; bids within ``rel_tol`` of the minimum tie and the lowest
    (robot, task) pair among them wins."""
    if not bids:
        raise ValueError("Cannot select a winner from no bids")
    best = min(b.value for b in bids)
    limit = best + rel_tol * abs(best)
    tied = (b for b in bids if b.value <= limit)
    return min(tied, key=lambda b: (b.robot, b.task))


def _round_bids(
    robots: Mapping[int, Robot],
    ends: Mapping[int, Point],
    unassigned: Sequence[Task],
    metric: BaseBidMetric,
    context: AuctionContext,
) -> List[Bid]:
    return [
        Bid(
            metric.bid(robot, ends[i], task, context) * context.scale_for(i),
            i,
            task.id,
        )
        for task in unassigned
        for i, robot in robots.items()
    ]


def run_auction(
    robots: Sequence[Robot],
    tasks: Sequence[Task],
    metric: Union[str, BidMetricKind, BaseBidMetric] = "energy",
    context: Optional[AuctionContext] = None,
    start_positions: Optional[Mapping[int, Point]] = None,
    rel_tol: float = 1e-9,
) -> Tuple[Schedule, AuctionTrace]:
    """Allocate ``tasks`` to ``robots`` by sequential single-item auction.

    Parameters
    ----------
    robots :
        Bidders. Must be nonempty when there are tasks.
    tasks :
        Tasks to auction, in any order.
    metric :
        Bid metric name, kind or instance.
    context :
        Shared bidding context.
    start_positions :
        Position each robot's sequence starts from; defaults to its depot.
    rel_tol :
        Relative tolerance under which two bids tie.

    Returns
    -------
    Tuple[Schedule, AuctionTrace]
    """
    check_allocation_input(robots, tasks)
    context = context or AuctionContext()
    resolved = get_metric(metric)
    resolved.check_instance(robots, tasks, context)
    fleet = robot_index(robots)
    ends: Dict[int, Point] = start_positions_for(robots, start_positions)
    unassigned = sorted(tasks, key=lambda t: t.id)
    sequences: Dict[int, List[Task]] = {i: [] for i in fleet}
    trace = AuctionTrace(metric=resolved.name())
    while unassigned:
        bids = _round_bids(fleet, ends, unassigned, resolved, context)
        trace.bid_count += len(bids)
        winner = select_winner(bids, rel_tol)
        others = [b.value for b in bids if b != winner]
        task = next(t for t in unassigned if t.id == winner.task)
        trace.rounds.append(
            AuctionRound(
                len(trace.rounds),
                task.id,
                winner.robot,
                winner.value,
                min(others) if others else math.nan,
                tuple(bids),
            )
        )
        sequences[winner.robot].append(task)
        ends[winner.robot] = task.dropoff
        unassigned.remove(task)
    return build_schedule(robots, sequences, context, start_positions), trace


class SequentialAuction(BaseAllocator):
    """Auction allocator; B3 is this allocator with ``metric="distance"``.

    Parameters
    ----------
    metric :
        Name of the bid metric, see :data:`amrfleet.bids.bid_metrics`.
    rel_tol :
        Relative tolerance under which two bids tie.

    Attributes
    ----------
    trace_ :
        Trace of the most recent allocation.
    """

    def __init__(
        self,
        metric: Union[str, BidMetricKind, BaseBidMetric] = "energy",
        rel_tol: float = 1e-9,
    ) -> None:
        self.metric = metric
        self.rel_tol = rel_tol

    @override
    def allocate(
        self,
        robots: Sequence[Robot],
        tasks: Sequence[Task],
        context: AuctionContext,
        start_positions: Optional[Mapping[int, Point]] = None,
    ) -> Schedule:
        schedule, self.trace_ = run_auction(
            robots, tasks, self.metric, context, start_positions, self.rel_tol
        )
        return schedule

    @override
    def name(self) -> str:
        return "auction[{}]".format(get_metric(self.metric).name())


def ranking_accuracy(
    tasks: Sequence[Task],
    robots: Sequence[Robot],
    cheap_metric: Union[str, BidMetricKind, BaseBidMetric],
    oracle_metric: Union[str, BidMetricKind, BaseBidMetric],
    context: Optional[AuctionContext] = None,
) -> Tuple[float, float]:
    """Compare a cheap metric's round winners against an oracle's.

    The auction is replayed along the oracle's own rounds. In each round both
    metrics price the same state; the round counts as correct when their
    winners agree.

    Returns
    -------
    Tuple[float, float]
        Winner accuracy, and mean ``|b_cheap - b_oracle| / b_oracle`` over
        every evaluated bid (NaN unless both metrics are in joules).
    """
    context = context or AuctionContext()
    cheap, oracle = get_metric(cheap_metric), get_metric(oracle_metric)
    cheap.check_instance(robots, tasks, context)
    _, trace = run_auction(robots, tasks, oracle, context)
    compare_values = cheap.energy_valued and oracle.energy_valued
    fleet = robot_index(robots)
    ends = start_positions_for(robots)
    unassigned = sorted(tasks, key=lambda t: t.id)
    by_id = {t.id: t for t in tasks}
    hits = 0
    errors: List[float] = []
    for rnd in trace.rounds:
        cheap_bids = _round_bids(fleet, ends, unassigned, cheap, context)
        winner = select_winner(cheap_bids)
        hits += (winner.robot, winner.task) == (rnd.winner, rnd.task)
        if compare_values:
            errors.extend(
                abs(c.value - o.value) / o.value
                for c, o in zip(cheap_bids, rnd.bids)
                if o.value != 0.0
            )
        task = by_id[rnd.task]
        ends[rnd.winner] = task.dropoff
        unassigned.remove(task)
    accuracy = hits / len(trace.rounds) if trace.rounds else 1.0
    if not compare_values:
        return accuracy, math.nan
    return accuracy, float(np.mean(errors)) if errors else 0.0


def suboptimality_bound(
    trace: AuctionTrace, eps_bar: float, scale: Optional[float] = None
) -> float:
    """Additive bound ``2 * m * eps_bar * scale`` in bid units.

    ``eps_bar`` is a relative bid error, so it is turned into bid units by
    ``scale``, by default the mean bid magnitude in ``trace``.
    """
    if eps_bar < 0.0:
        raise ValueError("eps_bar must be >= 0, got {}".format(eps_bar))
    scale = trace.mean_bid if scale is None else scale
    return 2.0 * len(trace.rounds) * eps_bar * scale


def suboptimality_bound_check(
    trace: AuctionTrace,
    eps_bar: float,
    reference_cost: float,
    scale: Optional[float] = None,
) -> bool:
    """True iff the auction's fleet cost is within the additive bound of
    ``reference_cost``."""
    bound = suboptimality_bound(trace, eps_bar, scale)
    slack = 1e-9 * max(abs(reference_cost), 1.0)
    return trace.fleet_cost <= reference_cost + bound + slack
