import math

import pytest

import amrfleet as af
from amrfleet.callbacks import CostToGoMonitor
from amrfleet.rescheduler import (
    DisruptionEvent,
    DisruptionKind,
    TriggerConfig,
    zeno_budget,
)
from amrfleet.scenario import generate_disruptions
from amrfleet.simulation import FleetSimulator, PredictionMode

from .utils import NOMINAL, non_increasing

CONTEXT = af.AuctionContext(options=NOMINAL)
ROBOTS = [af.Robot(0, (2.0, 2.0)), af.Robot(1, (18.0, 2.0))]
TASKS = [
    af.Task(0, (4.0, 3.0), (6.0, 6.0), 5.0),
    af.Task(1, (16.0, 3.0), (14.0, 6.0), 5.0),
    af.Task(2, (7.0, 8.0), (9.0, 10.0), 10.0),
    af.Task(3, (13.0, 8.0), (11.0, 10.0), 0.0),
]
PRIORITY = af.Task(9, (10.0, 4.0), (10.0, 7.0), 2.0, priority=True)


def plan(robot, sequence):
    return af.optimize_route(
        robot.depot,
        sequence,
        robot.params,
        robot.battery,
        options=NOMINAL,
        start_state=robot.initial_state(),
        robot_id=robot.id,
    )


@pytest.fixture(scope="module")
def planned():
    schedule, _ = af.run_auction(ROBOTS, TASKS, "energy", CONTEXT)
    by_id = {t.id: t for t in TASKS}
    routes = {
        r.id: plan(r, [by_id[t] for t in schedule.sequences[r.id]]) for r in ROBOTS
    }
    return schedule, routes


def simulator(planned, **kwargs):
    schedule, routes = planned
    return FleetSimulator(ROBOTS, TASKS, schedule, routes, CONTEXT, **kwargs)


def test_undisturbed_run_follows_the_plan(planned):
    _, routes = planned
    monitor = CostToGoMonitor()
    result = simulator(planned, callbacks=[monitor]).run()
    assert result.served == [0, 1, 2, 3]
    assert result.unserved == []
    assert len(result.event_log) == 0
    assert result.faulted == []
    assert result.makespan == pytest.approx(max(r.t_end for r in routes.values()))
    planned_energy = math.fsum(r.total_energy for r in routes.values())
    assert result.fleet_energy == pytest.approx(planned_energy, rel=1e-6)
    # closed-form cost-to-go only drops as tasks are committed
    assert monitor.increases == []
    assert non_increasing([v for _, v in monitor.history], tol=1e-9)
    assert result.cost_to_go[-1].unstarted_count == 0
    assert list(result.energy_series.columns) == ["t", "fleet_energy"]
    assert "Simulation Result" in str(result)


def test_fault_hands_work_to_survivor(planned):
    result = simulator(planned).run([DisruptionEvent("fault", 1.0, robot=1)])
    assert result.faulted == [1]
    assert result.event_log.count("fault") == 1
    assert result.served == [0, 1, 2, 3]
    assert result.routes[1].t_stop == 1.0
    assert result.schedule.sequences[1] == ()
    entry = result.event_log.entries[0]
    assert entry.robots == (1,)
    assert entry.tasks_reassigned >= 1


def test_priority_task_is_served(planned):
    event = DisruptionEvent("priority_task", 2.0, task=PRIORITY)
    result = simulator(planned).run([event])
    assert result.event_log.count("priority_task") == 1
    assert PRIORITY.id in result.served
    assert result.unserved == []
    assert result.event_log.entries[0].tasks_reassigned == 1


def test_energy_deviation_fires_after_measurement(planned):
    event = DisruptionEvent("energy_deviation", 0.0, robot=0, magnitude=0.5)
    sim = simulator(planned)
    result = sim.run([event])
    kinds = [e.kind for e in result.event_log.entries]
    assert "energy_deviation" in kinds
    # the event itself is never a reschedule
    assert result.event_log.entries[0].t > 0.0
    assert result.unserved == []
    assert result.fleet_energy > 0.0
    deviation_times = [
        e.t for e in result.event_log.entries if e.kind == "energy_deviation"
    ]
    gaps = [b - a for a, b in zip(deviation_times, deviation_times[1:])]
    assert all(g >= TriggerConfig().min_interval for g in gaps)
    assert len(result.event_log) <= zeno_budget(
        result.makespan, len(ROBOTS), TriggerConfig()
    )


def test_injected_energy(planned):
    sim = simulator(planned)
    route = sim.routes[0]
    t_inj, t = 1.0, 3.0
    sim.injections[0].append((t_inj, 0.5))
    e, e_inj = route.cumulative_energy_at(t), route.cumulative_energy_at(t_inj)
    assert sim.actual_energy(0, t) == pytest.approx(e + 0.5 * (e - e_inj))
    assert sim.actual_energy(0, 0.5) == pytest.approx(route.cumulative_energy_at(0.5))
    assert sim.predicted_energy(0, t) == pytest.approx(e)


def test_committed_prefix(planned):
    sim = simulator(planned)
    assert sim.committed(0, -1.0) == (0, None)
    keep, in_progress = sim.committed(0, 0.5)
    first = sim.routes[0].segments[0].task_id
    assert in_progress == first
    assert all(s.task_id == first for s in sim.routes[0].segments[:keep])
    state = sim.fleet_state(0.5)
    assert state.robots[0].in_progress == first
    assert state.robots[0].t_free >= 0.5


def test_cold_mode(planned):
    result = simulator(planned, mode="cold").run(
        [DisruptionEvent("fault", 1.0, robot=0)]
    )
    assert [e.mode for e in result.event_log.entries] == ["cold"]
    assert result.served == [0, 1, 2, 3]


def test_closed_form_prediction_runs(planned):
    sim = simulator(planned, prediction="closed_form")
    assert sim.prediction == PredictionMode.CLOSED_FORM
    result = sim.run()
    assert result.unserved == []


def test_events_after_max_time_are_dropped(planned):
    late = DisruptionEvent("fault", 5000.0, robot=0)
    result = simulator(planned, max_time=3600.0).run([late])
    assert len(result.event_log) == 0
    assert result.faulted == []


def test_missing_route(planned):
    schedule, routes = planned
    with pytest.raises(ValueError, match="No route"):
        FleetSimulator(ROBOTS, TASKS, schedule, {0: routes[0]})



@pytest.mark.parametrize("seed", range(12))
def test_warm_rescheduling_on_seeded_streams(planned, seed):
    stations = sorted({p for t in TASKS for p in (t.pickup, t.dropoff)})
    events = generate_disruptions(
        [r.id for r in ROBOTS],
        stations,
        60.0,
        fault_rate=0.01,
        priority_rate=0.05,
        deviation_rate=0.05,
        payload_range=(0.0, 10.0),
        first_task_id=10,
        seed=seed,
    )
    faults = [e for e in events if e.kind == DisruptionKind.FAULT]
    priority = [e.task.id for e in events if e.kind == DisruptionKind.PRIORITY_TASK]
    warm = simulator(planned).run(events)
    cold = simulator(planned, mode="cold").run(events)
    budget = zeno_budget(60.0, len(ROBOTS), TriggerConfig(), len(faults), len(priority))
    assert len(warm.event_log) <= budget
    assert af.validate_partition(warm.schedule, [t.id for t in TASKS] + priority)
    for entry in warm.event_log.entries:
        if entry.kind == "priority_task":
            assert entry.tasks_reassigned == 1
    assert warm.fleet_energy <= 1.15 * cold.fleet_energy
