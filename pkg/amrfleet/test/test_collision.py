import math
import warnings

import pytest

import amrfleet as af
from amrfleet.collision import (
    ConflictWindow,
    conflicts_frame,
    min_separation,
    penalty_integral,
    proximity_penalty,
    retime_segment,
)
from amrfleet.domain import RobotState
from amrfleet.exceptions import ResidualConflictWarning

from .utils import NOMINAL

DT = 0.05


def one_way(robot_id, depot, task, heading=0.0):
    return af.optimize_route(
        depot,
        [task],
        options=NOMINAL,
        start_state=RobotState(depot[0], depot[1], heading),
        return_to_depot=False,
        robot_id=robot_id,
    )


@pytest.fixture(scope="module")
def head_on():
    # both robots stop within a few decimetres of each other
    r0 = one_way(0, (2.0, 10.0), af.Task(0, (4.0, 10.0), (10.0, 10.0)))
    r1 = one_way(1, (18.0, 10.0), af.Task(1, (16.0, 10.0), (10.2, 10.0)), math.pi)
    return [r0, r1]


@pytest.fixture(scope="module")
def apart():
    r0 = one_way(0, (2.0, 2.0), af.Task(0, (4.0, 2.0), (8.0, 2.0)))
    r1 = one_way(1, (2.0, 18.0), af.Task(1, (4.0, 18.0), (8.0, 18.0)))
    return [r0, r1]


def test_proximity_penalty():
    assert proximity_penalty((1.0, 1.0), (1.0, 1.0)) == 1.0
    assert proximity_penalty((0.0, 0.0), (0.5, 0.0)) == 0.0
    assert proximity_penalty((0.0, 0.0), (0.25, 0.0)) == pytest.approx(0.25)
    assert proximity_penalty((0.0, 0.0), (3.0, 0.0)) == 0.0
    with pytest.raises(ValueError, match="d_safe"):
        proximity_penalty((0.0, 0.0), (1.0, 0.0), 0.0)


def test_detect_head_on_conflict(head_on):
    conflicts = af.detect_conflicts(head_on, dt=DT)
    assert conflicts
    for w in conflicts:
        assert w.robots == (0, 1)
        assert w.t_interval[0] <= w.t_interval[1]
        assert w.min_separation < 0.5
    assert min_separation(head_on, DT) < 0.5
    assert penalty_integral(head_on, dt=DT) > 0.0
    frame = conflicts_frame(conflicts)
    assert list(frame.columns) == ["robot_a", "robot_b", "t_start", "t_end", "min_sep"]
    assert len(frame) == len(conflicts)


def test_no_conflict_when_apart(apart):
    assert af.detect_conflicts(apart, dt=DT) == []
    assert penalty_integral(apart, dt=DT) == 0.0
    assert min_separation(apart, DT) > 10.0
    result = af.refine(apart, [], lambda_c=1000.0, dt=DT)
    assert result.resolved
    assert result.trajectories == apart
    assert result.penalty_before == result.penalty_after == 0.0


def test_degenerate_fleets(apart):
    assert af.detect_conflicts([], dt=DT) == []
    assert af.detect_conflicts(apart[:1], dt=DT) == []
    assert min_separation(apart[:1], DT) == math.inf
    idle = af.optimize_route((5.0, 5.0), [], options=NOMINAL, robot_id=2)
    assert af.detect_conflicts([idle, apart[0]], dt=DT) == []


def test_window_overlap():
    a = ConflictWindow((0, 1), (1.0, 2.0), 0.3)
    assert a.overlaps(ConflictWindow((0, 1), (2.0, 3.0), 0.4))
    assert not a.overlaps(ConflictWindow((0, 1), (2.5, 3.0), 0.4))
    assert not a.overlaps(ConflictWindow((0, 2), (1.0, 2.0), 0.4))


def test_retime_segment(apart):
    route = apart[0]
    slow = retime_segment(route, 0, 0.5)
    assert slow.segments[0].duration == pytest.approx(2.0 * route.segments[0].duration)
    assert slow.segments[0].path == route.segments[0].path
    assert slow.segments[1].t_start == pytest.approx(slow.segments[0].t_end)
    assert slow.segments[1].duration == pytest.approx(route.segments[1].duration)
    assert slow.task_sequence == route.task_sequence


def test_refine_never_raises_penalty(head_on):
    conflicts = af.detect_conflicts(head_on, dt=DT)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResidualConflictWarning)
        result = af.refine(head_on, conflicts, lambda_c=1000.0, dt=DT, max_rounds=4)
    assert result.penalty_after <= result.penalty_before
    assert result.penalty_before == pytest.approx(penalty_integral(head_on, dt=DT))
    assert [r.task_sequence for r in result.trajectories] == [[0], [1]]
    assert result.resolved == (not result.residual)
    assert "Refinement Result" in str(result)
    with pytest.raises(ValueError, match="lambda_c"):
        af.refine(head_on, conflicts, lambda_c=0.0)


@pytest.fixture(scope="module")
def crossing():
    # perpendicular lanes meeting at (10, 10) at the same time
    r0 = one_way(0, (2.0, 10.0), af.Task(0, (4.0, 10.0), (16.0, 10.0)))
    r1 = one_way(
        1, (10.0, 2.0), af.Task(1, (10.0, 4.0), (10.0, 16.0)), math.pi / 2
    )
    return [r0, r1]


def test_refine_separates_crossing_robots(crossing):
    conflicts = af.detect_conflicts(crossing, dt=DT)
    assert conflicts
    before = min_separation(crossing, dt=DT)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResidualConflictWarning)
        result = af.refine(crossing, conflicts, lambda_c=1000.0, dt=DT, max_rounds=4)
    assert result.penalty_after < result.penalty_before
    assert min_separation(result.trajectories, dt=DT) > before
