import os
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from .input_validation import check_n_jobs

N_JOBS_ENV = "AMRFLEET_N_JOBS"


def n_jobs_from_env(n_jobs: Optional[int] = None) -> int:
    """Worker budget: explicit value, else ``AMRFLEET_N_JOBS``, else 1."""
    if n_jobs is not None:
        return check_n_jobs(n_jobs)
    value = os.environ.get(N_JOBS_ENV)
    if value is None or value.strip() == "":
        return 1
    try:
        return check_n_jobs(value)
    except ValueError:
        raise ValueError(
            "{} must be a nonzero integer, got {!r}".format(N_JOBS_ENV, value)
        )


@dataclass
class DescentResult:
    """Result of coordinate descent.

    Attributes:
        x: The solution.
        eval: The objective at the solution.
        num_iter: The number of sweeps.
        feval: The number of function evaluations.
        history: Best objective after each sweep; nonincreasing.
    """

    x: np.ndarray
    eval: float
    num_iter: int
    feval: int
    history: List[float] = field(default_factory=list)

    def __str__(self) -> str:
        return (
            "Coordinate Descent Result:\n\teval: {}\n\tnum_iter:"
            " {}\n\tfeval: {}".format(self.eval, self.num_iter, self.feval)
        )


def coordinate_descent(
    f: Callable[..., float],
    x0: Sequence[float],
    lower: Sequence[float],
    upper: Sequence[float],
    step: float = 0.08,
    min_step: float = 0.01,
    max_iter: int = 10,
    args: Tuple[Any, ...] = (),
    verbose: int = 0,
) -> DescentResult:
    """Minimize a box-constrained function of a few variables without
    gradients.

    Each sweep probes ``x_i +/- step`` for every coordinate and moves to the
    first improvement; the step halves after a sweep without improvement. A
    final finite-difference gradient step with backtracking refines the
    solution. Only strict improvements are accepted, so the returned value
    never exceeds ``f(x0)``.

    Parameters
    ----------
    f : callable
        Objective ``f(x, *args) -> float``; may return ``inf`` for infeasible
        points.
    x0 : array_like
        Starting point inside the box.
    lower, upper : array_like
        Box bounds.
    step : float, optional
        Initial probe size.
    min_step : float, optional
        Stop once the probe size falls below this.
    max_iter : int, optional
        Maximum number of sweeps.
    args : tuple, optional
        Extra arguments to pass to the objective function.
    verbose : int, optional
        Print progress every ``verbose`` sweeps.
    """
    x = np.clip(np.asarray(x0, dtype=np.float64), lower, upper)
    lo = np.asarray(lower, dtype=np.float64)
    hi = np.asarray(upper, dtype=np.float64)
    feval = 1
    fx = f(x, *args)
    history = [fx]
    k = 0
    for k in range(max_iter):
        improved = False
        for i in range(x.size):
            for sign in (1.0, -1.0):
                cand = x.copy()
                cand[i] = min(max(x[i] + sign * step, lo[i]), hi[i])
                if cand[i] == x[i]:
                    continue
                fc = f(cand, *args)
                feval += 1
                if fc < fx:
                    x, fx, improved = cand, fc, True
                    break
        history.append(fx)
        if verbose and k % verbose == 0:
            print(
                "CD:\tk={}\tfeval:{}\teval:{:10.5f}\tstep:{:.4f}".format(
                    k, feval, fx, step
                )
            )
        if not improved:
            step *= 0.5
            if step < min_step:
                break

    # finite-difference refinement
    if np.isfinite(fx):
        h = max(step, min_step) * 0.5
        grad = np.zeros_like(x)
        for i in range(x.size):
            probe = x.copy()
            probe[i] = min(x[i] + h, hi[i])
            if probe[i] == x[i]:
                probe[i] = max(x[i] - h, lo[i])
            fp = f(probe, *args)
            feval += 1
            if np.isfinite(fp) and probe[i] != x[i]:
                grad[i] = (fp - fx) / (probe[i] - x[i])
        norm = float(np.linalg.norm(grad))
        if norm > 0.0:
            lr = step / norm
            for _ in range(3):
                cand = np.clip(x - lr * grad, lo, hi)
                fc = f(cand, *args)
                feval += 1
                if fc < fx:
                    x, fx = cand, fc
                    break
                lr *= 0.5
        history.append(fx)

    return DescentResult(x, fx, k + 1, feval, history)
