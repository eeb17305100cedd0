import math

import pytest
from hypothesis import given, settings, strategies as st

import amrfleet as af
from amrfleet.allocators import (
    Bid,
    SequentialAuction,
    ranking_accuracy,
    select_winner,
    suboptimality_bound,
    suboptimality_bound_check,
)

from .utils import (
    FAST,
    corner_robots,
    instances,
    random_instance,
    sanity_check_schedule,
)

CONTEXT = af.AuctionContext()


def test_single_robot_single_task():
    robots = [af.Robot(0, (0.0, 0.0))]
    tasks = [af.Task(7, (1.0, 1.0), (2.0, 2.0))]
    schedule, trace = af.run_auction(robots, tasks)
    assert schedule.sequences == {0: (7,)}
    assert trace.bid_count == 1
    assert len(trace.rounds) == 1
    assert math.isnan(trace.rounds[0].second_best_bid)


@pytest.mark.parametrize("metric", ["energy", "distance", "zoned"])
def test_far_corners(metric):
    robots = [af.Robot(0, (0.0, 0.0)), af.Robot(1, (20.0, 20.0))]
    tasks = [
        af.Task(0, (1.0, 1.0), (2.0, 1.0), 5.0),
        af.Task(1, (19.0, 19.0), (18.0, 19.0), 5.0),
    ]
    schedule, trace = af.run_auction(robots, tasks, metric)
    assert schedule.sequences == {0: (0,), 1: (1,)}
    assert trace.metric == metric


def test_no_tasks():
    schedule, trace = af.run_auction(corner_robots(3), [])
    assert schedule.sequences == {0: (), 1: (), 2: ()}
    assert trace.rounds == []
    assert trace.bid_count == 0
    assert trace.fleet_cost == 0.0
    assert trace.to_frame().empty


def test_rejects_bad_input():
    with pytest.raises(ValueError, match="empty fleet"):
        af.run_auction([], [af.Task(0, (0, 0), (1, 1))])
    with pytest.raises(ValueError, match="unknown robots"):
        af.run_auction(corner_robots(2), [], start_positions={5: (0.0, 0.0)})
    with pytest.raises(ValueError, match="Unknown bid metric"):
        af.run_auction(corner_robots(2), [], "cheapest")


def test_ties_go_to_lower_robot_then_task():
    robots = [af.Robot(1, (0.0, 0.0)), af.Robot(0, (0.0, 0.0))]
    tasks = [af.Task(1, (1.0, 0.0), (2.0, 0.0)), af.Task(0, (0.0, 1.0), (0.0, 2.0))]
    _, trace = af.run_auction(robots, tasks, "distance")
    assert (trace.rounds[0].winner, trace.rounds[0].task) == (0, 0)
    tied = [Bid(1.0, 2, 0), Bid(1.0, 1, 3), Bid(1.0, 1, 2)]
    assert select_winner(tied) == (1.0, 1, 2)
    assert select_winner([Bid(1.0, 2, 0), Bid(1.0 + 1e-12, 0, 0)]).robot == 0
    with pytest.raises(ValueError, match="no bids"):
        select_winner([])


def test_start_positions_override_depots():
    robots = [af.Robot(0, (0.0, 0.0)), af.Robot(1, (20.0, 20.0))]
    tasks = [af.Task(0, (1.0, 1.0), (2.0, 1.0))]
    schedule, _ = af.run_auction(robots, tasks, start_positions={1: (1.0, 0.5)})
    assert schedule.sequences[1] == (0,)


def test_trace_accounting():
    robots, tasks = random_instance(3, 4, 9)
    schedule, trace = af.run_auction(robots, tasks)
    n, m = len(robots), len(tasks)
    assert trace.bid_count == n * m * (m + 1) // 2
    assert len(trace.rounds) == m
    assert [r.round for r in trace.rounds] == list(range(m))
    assert math.isclose(trace.fleet_cost, sum(r.winning_bid for r in trace.rounds))
    for r in trace.rounds:
        assert r.winning_bid <= r.second_best_bid
        assert len(r.bids) == n * (m - r.round)
    frame = trace.to_frame()
    assert list(frame.columns) == [
        "round",
        "task",
        "winner",
        "winning_bid",
        "second_best_bid",
    ]
    assert len(frame) == m
    assert "Auction Trace" in str(trace)
    sanity_check_schedule(schedule, tasks)


def test_winner_is_monotone():
    robots, tasks = random_instance(5, 3, 6)
    _, trace = af.run_auction(robots, tasks)
    for r in trace.rounds:
        lowered = [
            b._replace(value=b.value * 0.5)
            if (b.robot, b.task) == (r.winner, r.task)
            else b
            for b in r.bids
        ]
        assert select_winner(lowered)[1:] == (r.winner, r.task)


def test_deterministic_and_scale_invariant():
    robots, tasks = random_instance(11, 5, 12)
    first = af.run_auction(robots, tasks)
    second = af.run_auction(robots, tasks)
    assert first[0] == second[0]
    assert first[1].to_frame().equals(second[1].to_frame())
    scaled = af.AuctionContext(bid_scale={r.id: 3.0 for r in robots})
    schedule, trace = af.run_auction(robots, tasks, context=scaled)
    assert schedule.sequences == first[0].sequences
    assert math.isclose(trace.fleet_cost, 3.0 * first[1].fleet_cost)


def test_bid_scale_shifts_work():
    robots = [af.Robot(0, (0.0, 0.0)), af.Robot(1, (1.0, 0.0))]
    tasks = [af.Task(0, (2.0, 0.0), (3.0, 0.0))]
    schedule, _ = af.run_auction(robots, tasks)
    assert schedule.sequences[1] == (0,)
    penalised = af.AuctionContext(bid_scale={1: 10.0})
    schedule, _ = af.run_auction(robots, tasks, context=penalised)
    assert schedule.sequences[0] == (0,)


def test_distance_metric_example():
    robot = af.Robot(0, (0.0, 0.0))
    task = af.Task(0, (3.0, 4.0), (3.0, 8.0))
    assert af.bid((0.0, 0.0), task, "distance", CONTEXT, robot) == 9.0


@settings(deadline=None, max_examples=50)
@given(instances(payload=False))
def test_distance_and_energy_pick_same_winners(instance):
    robots, tasks = instance
    _, by_energy = af.run_auction(robots, tasks, "energy")
    _, by_distance = af.run_auction(robots, tasks, "distance")
    assert [(r.winner, r.task) for r in by_energy.rounds] == [
        (r.winner, r.task) for r in by_distance.rounds
    ]


@settings(deadline=None, max_examples=50)
@given(instances(), st.sampled_from(["energy", "distance", "zoned"]))
def test_auction_partition(instance, metric):
    robots, tasks = instance
    allocator = SequentialAuction(metric)
    schedule = allocator.allocate(robots, tasks, CONTEXT)
    sanity_check_schedule(schedule, tasks)
    assert len(allocator.trace_.rounds) == len(tasks)


def test_ranking_accuracy():
    robots, tasks = random_instance(2, 3, 6)
    assert ranking_accuracy(tasks, robots, "energy", "energy") == (1.0, 0.0)
    equal_payload = [af.Task(t.id, t.pickup, t.dropoff) for t in tasks]
    accuracy, error = ranking_accuracy(equal_payload, robots, "distance", "energy")
    assert accuracy == 1.0
    assert math.isnan(error)
    # with uniform friction the zoned bid reproduces the closed form
    accuracy, error = ranking_accuracy(tasks, robots, "zoned", "energy")
    assert accuracy == 1.0
    assert error == pytest.approx(0.0, abs=1e-9)
    accuracy, error = ranking_accuracy([], robots, "energy", "distance")
    assert accuracy == 1.0
    assert math.isnan(error)


def test_closed_form_bid_tracks_the_trajectory_oracle():
    context = af.AuctionContext(options=FAST)
    accuracy, error = zip(
        *(
            ranking_accuracy(tasks, robots, "energy", "oracle", context)
            for robots, tasks in (random_instance(seed, 3, 4) for seed in range(6))
        )
    )
    assert 0.75 <= sum(accuracy) / len(accuracy) <= 1.0
    assert 0.05 <= sum(error) / len(error) <= 0.40


def test_suboptimality_bound():
    robots, tasks = random_instance(8, 2, 5)
    _, trace = af.run_auction(robots, tasks)
    assert suboptimality_bound(trace, 0.0) == 0.0
    assert suboptimality_bound(trace, 0.1, scale=2.0) == pytest.approx(2 * 5 * 0.1 * 2)
    expected = 2 * 5 * 0.1 * trace.mean_bid
    assert suboptimality_bound(trace, 0.1) == pytest.approx(expected)
    assert suboptimality_bound_check(trace, 0.0, trace.fleet_cost)
    assert not suboptimality_bound_check(trace, 0.0, 0.5 * trace.fleet_cost)
    assert suboptimality_bound_check(trace, 1.0, 0.5 * trace.fleet_cost)
    with pytest.raises(ValueError, match="eps_bar"):
        suboptimality_bound(trace, -0.1)
