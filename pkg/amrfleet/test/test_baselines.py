import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import amrfleet as af
from amrfleet.allocators import (
    BaselineKind,
    Enumeration,
    NearestRobot,
    NearestTask,
    NearestTaskRule,
    SequentialAuction,
    SubsetTable,
    allocators,
    baseline_allocator,
    const_velocity_energy,
    const_velocity_route,
    enumerate_optimal,
    fixed_order_cost,
    nearest_robot_allocate,
    nearest_task_allocate,
)
from amrfleet.bids import metric_oracle
from amrfleet.domain import distance
from amrfleet.energy import route_energy_closed_form
from amrfleet.exceptions import SizeGuardError

from .utils import NOMINAL, instances, random_instance, sanity_check_schedule

CONTEXT = af.AuctionContext()
ORACLE = metric_oracle("energy", CONTEXT)


def chain_cost(robot, tasks):
    cost, position = 0.0, robot.depot
    for task in tasks:
        cost += ORACLE(robot, position, task)
        position = task.dropoff
    return cost


def nearest_neighbour_chain(start, tasks):
    order, position, left = [], start, list(tasks)
    while left:
        task = min(left, key=lambda t: (distance(position, t.pickup), t.id))
        order.append(task.id)
        position = task.dropoff
        left.remove(task)
    return tuple(order)


def test_nearest_task_single_robot_is_nearest_neighbour():
    for seed in range(10):
        robots, tasks = random_instance(seed, 1, 8)
        schedule = nearest_task_allocate(robots, tasks)
        assert schedule.sequences[0] == nearest_neighbour_chain(robots[0].depot, tasks)


def test_nearest_task_symmetric_and_ties():
    robots = [af.Robot(0, (0.0, 0.0)), af.Robot(1, (20.0, 0.0))]
    tasks = [af.Task(0, (18.0, 0.0), (17.0, 0.0)), af.Task(1, (2.0, 0.0), (3.0, 0.0))]
    schedule = NearestTask().allocate(robots, tasks, CONTEXT)
    assert schedule.sequences == {0: (1,), 1: (0,)}
    same = [af.Task(2, (1.0, 0.0), (5.0, 5.0)), af.Task(1, (1.0, 0.0), (5.0, 0.0))]
    schedule = nearest_task_allocate(robots[:1], same)
    assert schedule.sequences[0] == (1, 2)
    # predicted energy is the closed-form route energy from the depot
    expected = route_energy_closed_form(
        (0.0, 0.0), [same[1], same[0]], robots[0].params, CONTEXT.friction
    )
    assert schedule.predicted_energy[0] == pytest.approx(expected)


def test_nearest_task_dispatch_serves_idle_robots():
    robots = [af.Robot(0, (0.0, 0.0)), af.Robot(1, (10.0, 0.0))]
    tasks = [af.Task(0, (1.0, 0.0), (2.0, 0.0)), af.Task(1, (3.0, 0.0), (4.0, 0.0))]
    # robot 1 is idle while robot 0 carries task 0
    dispatch = NearestTask().allocate(robots, tasks, CONTEXT)
    assert dispatch.sequences == {0: (0,), 1: (1,)}
    greedy = NearestTask("global_pair")
    assert greedy.rule == NearestTaskRule.GLOBAL_PAIR
    assert greedy.allocate(robots, tasks, CONTEXT).sequences == {0: (0, 1), 1: ()}
    assert str(NearestTask()) == "nearest_task"
    assert str(greedy) == "nearest_task[global_pair]"
    with pytest.raises(ValueError):
        NearestTask("round_robin")


def test_payload_above_every_capacity_is_rejected():
    robots = [af.Robot(0, (0.0, 0.0)), af.Robot(1, (5.0, 0.0))]
    tasks = [
        af.Task(0, (1.0, 0.0), (2.0, 0.0), 10.0),
        af.Task(1, (3.0, 0.0), (4.0, 0.0), 25.0),
    ]
    for allocator in (NearestTask(), NearestRobot(), SequentialAuction("energy")):
        with pytest.raises(ValueError, match="w_max"):
            allocator.allocate(robots, tasks, CONTEXT)
    strong = [af.Robot(2, (0.0, 0.0), af.RobotParams(w_max=30.0))]
    schedule = nearest_task_allocate(strong, tasks)
    assert schedule.sequences == {2: (0, 1)}


def test_nearest_robot_follows_arrival_order():
    robots = [af.Robot(0, (0.0, 0.0)), af.Robot(1, (10.0, 0.0))]
    tasks = [
        af.Task(0, (9.0, 0.0), (1.0, 0.0), arrival_time=5.0),
        af.Task(1, (8.0, 0.0), (9.5, 0.0), arrival_time=0.0),
    ]
    schedule = NearestRobot().allocate(robots, tasks, CONTEXT)
    assert schedule.sequences == {0: (), 1: (1, 0)}
    twins = [af.Robot(3, (0.0, 0.0)), af.Robot(2, (0.0, 0.0))]
    schedule = nearest_robot_allocate(twins, tasks[:1])
    assert schedule.sequences[2] == (0,)


@settings(deadline=None, max_examples=30)
@given(instances())
def test_baselines_partition(instance):
    robots, tasks = instance
    for allocator in (NearestTask(), NearestRobot(), SequentialAuction("distance")):
        sanity_check_schedule(allocator.allocate(robots, tasks, CONTEXT), tasks)


def test_baseline_registry():
    assert isinstance(baseline_allocator(BaselineKind.B1_NEAREST_TASK_OCP), NearestTask)
    assert isinstance(baseline_allocator("B2_nearest_robot_const_vel"), NearestRobot)
    b3 = baseline_allocator(BaselineKind.B3_DISTANCE_AUCTION)
    assert str(b3) == "auction[distance]"
    assert isinstance(baseline_allocator(BaselineKind.B4_ENUMERATION), Enumeration)
    assert sorted(allocators) == [
        "auction",
        "enumeration",
        "nearest_robot",
        "nearest_task",
    ]
    with pytest.raises(ValueError):
        baseline_allocator("B5")


def test_const_velocity_energy():
    robots = [af.Robot(0, (2.0, 2.0))]
    task = af.Task(0, (12.0, 2.0), (12.0, 12.0), 10.0)
    assert const_velocity_energy(af.Schedule.empty([0]), robots, [task]) == 0.0
    schedule = af.Schedule({0: [0]})
    energy = const_velocity_energy(schedule, robots, [task], 0.02, options=NOMINAL)
    closed = route_energy_closed_form(
        (2.0, 2.0), [task], robots[0].params, 0.02, return_to_depot=True
    )
    assert 0.9 < energy / closed < 1.6

    route = const_velocity_route(robots[0], [task], 0.02, options=NOMINAL)
    assert len(route.segments) == 3
    for seg in route.segments:
        assert seg.path.segments[0] == seg.path.segments[2] == 0.0
        assert seg.speed_profile.accel_share == 0.05
        assert seg.boundary == (0.0, 0.0)
    assert route.total_energy == pytest.approx(energy)
    with pytest.raises(ValueError, match="ramp_share"):
        const_velocity_route(robots[0], [task], ramp_share=0.0)


def test_enumeration_single_robot():
    robots, tasks = random_instance(4, 1, 5)
    schedule, cost = enumerate_optimal(robots, tasks, ORACLE)
    assert schedule.sequences[0] == tuple(sorted(t.id for t in tasks))
    ordered = sorted(tasks, key=lambda t: t.id)
    expected = route_energy_closed_form(
        robots[0].depot, ordered, robots[0].params, CONTEXT.friction
    )
    assert cost == pytest.approx(expected)


@pytest.mark.parametrize("seed", range(3))
def test_enumeration_matches_brute_force(seed):
    robots, tasks = random_instance(seed, 2, 3)
    best = math.inf
    for assignment in itertools.product(range(2), repeat=3):
        value = sum(
            chain_cost(robot, [t for t, r in zip(tasks, assignment) if r == i])
            for i, robot in enumerate(robots)
        )
        best = min(best, value)
    schedule, cost = enumerate_optimal(robots, tasks, ORACLE)
    assert cost == pytest.approx(best, rel=1e-12)
    sanity_check_schedule(schedule, tasks)
    assert fixed_order_cost(schedule, robots, tasks, ORACLE) == pytest.approx(cost)


def test_enumeration_guards_and_edges():
    robots, tasks = random_instance(1, 4, 2)
    with pytest.raises(SizeGuardError, match="limited"):
        enumerate_optimal(robots, tasks, ORACLE)
    robots, tasks = random_instance(1, 2, 9)
    with pytest.raises(SizeGuardError, match="limited"):
        Enumeration().allocate(robots, tasks, CONTEXT)
    schedule, cost = enumerate_optimal(robots, [], ORACLE)
    assert cost == 0.0
    assert schedule.sequences == {0: (), 1: ()}
    # identical robots tie; the lower robot index takes the task
    twins = [af.Robot(0, (0.0, 0.0)), af.Robot(1, (0.0, 0.0))]
    schedule, _ = enumerate_optimal(twins, tasks[:1], ORACLE)
    assert schedule.sequences == {0: (tasks[0].id,), 1: ()}


def test_held_karp_ordering():
    robots, tasks = random_instance(6, 1, 5)
    robot = robots[0]
    table = SubsetTable(robot, robot.depot, tasks, ORACLE, "optimal")
    best = min(chain_cost(robot, list(p)) for p in itertools.permutations(tasks))
    assert table.cost[-1] == pytest.approx(best)
    assert chain_cost(robot, table.sequence((1 << 5) - 1)) == pytest.approx(best)
    ascending = SubsetTable(robot, robot.depot, tasks, ORACLE)
    assert table.cost[-1] <= ascending.cost[-1] + 1e-9
    assert ascending.cost[-1] == pytest.approx(chain_cost(robot, tasks))


def test_enumeration_allocator():
    robots, tasks = random_instance(9, 2, 5)
    allocator = Enumeration(ordering="optimal")
    schedule = allocator.allocate(robots, tasks, CONTEXT)
    sanity_check_schedule(schedule, tasks)
    zoned = metric_oracle("zoned", CONTEXT)
    assert allocator.cost_ == pytest.approx(
        fixed_order_cost(schedule, robots, tasks, zoned, "optimal")
    )
    _, ascending_cost = enumerate_optimal(robots, tasks, zoned)
    assert allocator.cost_ <= ascending_cost + 1e-9


def test_auction_gap_to_enumeration():
    gaps = []
    rs = np.random.RandomState(0)
    for seed in range(50):
        n, m = int(rs.randint(2, 4)), int(rs.randint(3, 9))
        robots, tasks = random_instance(100 + seed, n, m)
        auction, _ = af.run_auction(robots, tasks, "energy", CONTEXT)
        _, optimum = enumerate_optimal(robots, tasks, ORACLE, "optimal")
        cost = fixed_order_cost(auction, robots, tasks, ORACLE, "optimal")
        assert cost >= optimum - 1e-9 * optimum
        gaps.append((cost - optimum) / optimum)
    assert max(gaps) <= 0.10
    assert np.mean(gaps) <= 0.05
