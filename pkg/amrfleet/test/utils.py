import numpy as np
from hypothesis import strategies as st

import amrfleet as af

FAST = af.TrajectoryOptions(dt=0.05, opt_dt=0.1, max_iter=2)
NOMINAL = af.TrajectoryOptions(dt=0.05, opt_dt=0.1, optimize=False)


def non_increasing(x, tol=1e-3):
    return all(x - y > -tol for x, y in zip(x, x[1:]))


def non_decreasing(x):
    return all(x <= y for x, y in zip(x, x[1:]))


def line_tasks(n, y=5.0, payload=0.0, first_id=0):
    """``n`` tasks side by side, each carried 2 m in +x."""
    return [
        af.Task(first_id + k, (2.0 + 3.0 * k, y), (4.0 + 3.0 * k, y), payload)
        for k in range(n)
    ]


def corner_robots(n, params=None):
    params = params or af.RobotParams()
    depots = [(2.0, 2.0), (18.0, 18.0), (2.0, 18.0), (18.0, 2.0)]
    return [af.Robot(i, depots[i % 4], params) for i in range(n)]


def sanity_check_schedule(schedule, tasks):
    assert af.validate_partition(schedule, [t.id for t in tasks])
    for robot, seq in schedule.sequences.items():
        assert 0 <= schedule.cursor[robot] <= len(seq)
        assert schedule.predicted_energy[robot] >= 0.0


def random_instance(seed, n, m):
    rs = np.random.RandomState(seed)
    robots = [af.Robot(i, rs.uniform(0, 20, 2)) for i in range(n)]
    tasks = [
        af.Task(k, rs.uniform(0, 20, 2), rs.uniform(0, 20, 2), rs.uniform(0, 20))
        for k in range(m)
    ]
    return robots, tasks


@st.composite
def instances(draw, max_robots=5, max_tasks=10, payload=True):
    n = draw(st.integers(1, max_robots))
    m = draw(st.integers(0, max_tasks))
    point = st.tuples(st.integers(0, 20), st.integers(0, 20))
    robots = [af.Robot(i, draw(point)) for i in range(n)]
    tasks = [
        af.Task(
            k,
            draw(point),
            draw(point),
            draw(st.integers(0, 20)) if payload else 0.0,
        )
        for k in range(m)
    ]
    return robots, tasks
