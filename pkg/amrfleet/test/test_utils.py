import numpy as np
import pytest

from amrfleet.utils import N_JOBS_ENV, coordinate_descent, n_jobs_from_env

from .utils import non_increasing


def quadratic(x, centre):
    return float(np.sum((x - centre) ** 2))


def test_coordinate_descent_quadratic():
    centre = np.array([0.3, 0.6])
    result = coordinate_descent(
        quadratic, [0.1, 0.1], [0.0, 0.0], [1.0, 1.0], max_iter=50, args=(centre,)
    )
    assert np.allclose(result.x, centre, atol=0.02)
    assert result.eval <= quadratic(np.array([0.1, 0.1]), centre)
    assert non_increasing(result.history)
    assert result.feval > result.num_iter
    assert "Coordinate Descent Result" in str(result)


def test_coordinate_descent_respects_box():
    result = coordinate_descent(
        quadratic, [0.5, 0.5], [0.0, 0.0], [0.2, 1.0], args=(np.array([0.9, 0.5]),)
    )
    assert 0.0 <= result.x[0] <= 0.2
    assert result.x[0] == pytest.approx(0.2)


def test_coordinate_descent_infeasible_region():
    # points with x[0] > 0.5 are infeasible; the optimum sits on that edge
    def f(x):
        return np.inf if x[0] > 0.5 else quadratic(x, np.array([0.8, 0.2]))

    result = coordinate_descent(f, [0.2, 0.2], [0.0, 0.0], [1.0, 1.0], max_iter=30)
    assert np.isfinite(result.eval)
    assert result.x[0] <= 0.5


def test_coordinate_descent_zero_iterations():
    calls = []

    def f(x):
        calls.append(x)
        return 1.0

    result = coordinate_descent(f, [0.5], [0.0], [1.0], max_iter=0)
    assert result.eval == 1.0
    assert np.array_equal(result.x, [0.5])


def test_n_jobs_from_env(monkeypatch):
    monkeypatch.delenv(N_JOBS_ENV, raising=False)
    assert n_jobs_from_env() == 1
    assert n_jobs_from_env(3) == 3
    monkeypatch.setenv(N_JOBS_ENV, "4")
    assert n_jobs_from_env() == 4
    assert n_jobs_from_env(-1) == -1
    monkeypatch.setenv(N_JOBS_ENV, " ")
    assert n_jobs_from_env() == 1
    monkeypatch.setenv(N_JOBS_ENV, "0")
    with pytest.raises(ValueError, match=N_JOBS_ENV):
        n_jobs_from_env()
    with pytest.raises(ValueError, match="nonzero"):
        n_jobs_from_env(0)
