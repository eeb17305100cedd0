"""Paired significance testing and correlation helpers for experiment
reports."""
import math
import warnings
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .exceptions import DegenerateSampleError

EXACT_MAX_N = 20


@dataclass(frozen=True)
class WilcoxonResult:
    """Result of a Wilcoxon signed-rank test.

    Attributes:
        statistic: Sum of the ranks of the positive differences.
        pvalue: Two-sided p-value.
        n: Number of nonzero differences.
        method: ``exact`` or ``normal``.
        zstatistic: Standardised statistic, NaN in exact mode.
    """

    statistic: float
    pvalue: float
    n: int
    method: str
    zstatistic: float = math.nan

    def __str__(self) -> str:
        return "Wilcoxon Result:\n\tW: {}\n\tp: {}\n\tn: {}\n\tmethod: {}".format(
            self.statistic, self.pvalue, self.n, self.method
        )


def _signed_ranks(x: Any, y: Any = None) -> np.ndarray:
    d = np.asarray(x, dtype=np.float64)
    if y is not None:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != d.shape:
            raise ValueError(
                "Paired samples differ in shape: {} vs {}".format(d.shape, y.shape)
            )
        d = d - y
    if d.ndim != 1:
        raise ValueError("Samples must be one-dimensional")
    if not np.isfinite(d).all():
        raise ValueError("Samples contain NaN or inf")
    d = d[d != 0.0]
    if d.size == 0:
        raise DegenerateSampleError("All paired differences are zero")
    return np.sign(d) * stats.rankdata(np.abs(d))


def exact_null_counts(ranks: Sequence[float]) -> np.ndarray:
    """Number of sign assignments giving each value of the positive rank sum.

    Ranks are doubled so that midranks of ties stay integral; entry ``k`` of
    the result counts the assignments whose rank sum is ``k / 2``.
    """
    doubled = np.rint(2.0 * np.abs(np.asarray(ranks, dtype=np.float64))).astype(
        np.int64
    )
    counts = np.zeros(int(doubled.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled:
        shifted = counts.copy()
        shifted[r:] += counts[: counts.size - r]
        counts = shifted
    return counts


def _exact_pvalue(signed: np.ndarray, statistic: float) -> float:
    counts = exact_null_counts(signed)
    k = int(round(2.0 * statistic))
    total = int(counts.sum())
    lower = int(counts[: k + 1].sum())
    upper = int(counts[k:].sum())
    return min(1.0, 2.0 * min(lower, upper) / total)


def wilcoxon_signed_rank(
    x: Any, y: Any = None, method: str = "auto"
) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test of paired samples.

    Zero differences are dropped. Ties share their midrank.

    Parameters
    ----------
    x :
        First sample, or the differences when ``y`` is None.
    y :
        Second sample.
    method :
        ``exact`` enumerates the null distribution of the rank sum,
        conditional on the observed ranks; ``normal`` uses the normal
        approximation with tie-corrected variance. ``auto`` is exact up to
        20 nonzero differences.

    Returns
    -------
    WilcoxonResult

    Raises
    ------
    DegenerateSampleError
        Every difference is zero.
    """
    if method not in ("auto", "exact", "normal"):
        raise ValueError("Unknown method {!r}".format(method))
    signed = _signed_ranks(x, y)
    n = signed.size
    statistic = float(signed[signed > 0].sum())
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal"
    if method == "exact":
        if n < 5:
            warnings.warn(
                "Only {} nonzero differences; no two-sided p below 0.05 "
                "is reachable".format(n)
            )
        return WilcoxonResult(statistic, _exact_pvalue(signed, statistic), n, method)
    _, tie_counts = np.unique(np.abs(signed), return_counts=True)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    var -= float((tie_counts**3 - tie_counts).sum()) / 48.0
    z = (statistic - mean) / math.sqrt(var)
    pvalue = min(1.0, 2.0 * float(stats.norm.sf(abs(z))))
    return WilcoxonResult(statistic, pvalue, n, method, z)


def pearson_r(x: Any, y: Any) -> float:
    """Pearson correlation; raises DegenerateSampleError on zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("Need two paired one-dimensional samples of size >= 2")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise DegenerateSampleError("Correlation of a constant sample is undefined")
    r = float(stats.pearsonr(x, y)[0])
    return min(1.0, max(-1.0, r))


def spearman_rho(x: Any, y: Any) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise DegenerateSampleError(
            "Rank correlation of a constant sample is undefined"
        )
    return float(stats.spearmanr(x, y)[0])


def paired_wilcoxon(
    left: pd.DataFrame,
    right: pd.DataFrame,
    column: str,
    on: Optional[Sequence[str]] = None,
    method: str = "auto",
) -> WilcoxonResult:
    """Pair the rows of two result tables on their shared key columns and
    test ``column``.

    Keys default to the shared non-float columns whose values overlap
    between the tables, so a label column that tells them apart is left out.
    """
    for frame, side in ((left, "left"), (right, "right")):
        if column not in frame.columns:
            raise ValueError("Column {!r} missing from {} table".format(column, side))
    if on is None:
        on = [
            c
            for c in left.columns
            if c in right.columns
            and c != column
            and not pd.api.types.is_float_dtype(left[c])
            and set(left[c]) & set(right[c])
        ]
    if not on:
        raise ValueError("No shared key columns to pair rows on")
    merged = left.merge(right, on=list(on), suffixes=("_left", "_right"))
    if merged.empty:
        raise ValueError("No rows pair up on {}".format(list(on)))
    return wilcoxon_signed_rank(
        merged[column + "_left"].to_numpy(),
        merged[column + "_right"].to_numpy(),
        method,
    )
