import itertools
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from amrfleet.exceptions import DegenerateSampleError
from amrfleet.stats import (
    exact_null_counts,
    paired_wilcoxon,
    pearson_r,
    spearman_rho,
    wilcoxon_signed_rank,
)


def brute_force_pvalue(d):
    d = np.asarray(d, dtype=np.float64)
    d = d[d != 0.0]
    ranks = sps.rankdata(np.abs(d))
    observed = ranks[d > 0].sum()
    sums = [
        sum(r for r, s in zip(ranks, signs) if s)
        for signs in itertools.product([0, 1], repeat=len(ranks))
    ]
    lower = sum(1 for s in sums if s <= observed + 1e-9)
    upper = sum(1 for s in sums if s >= observed - 1e-9)
    return min(1.0, 2.0 * min(lower, upper) / len(sums))


def test_all_positive():
    result = wilcoxon_signed_rank([1.0, 2.0, 3.0, 4.0, 5.0])
    assert result.statistic == 15.0
    assert result.pvalue == 0.0625
    assert result.n == 5
    assert result.method == "exact"
    assert math.isnan(result.zstatistic)
    assert wilcoxon_signed_rank(np.arange(1.0, 7.0)).pvalue == 0.03125
    assert "Wilcoxon Result" in str(result)


def test_paired_form_drops_zero_differences():
    x = [3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 4.0]
    y = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 4.0]
    result = wilcoxon_signed_rank(x, y)
    assert result.n == 6
    assert result.pvalue == 0.03125


def test_mirror_sample():
    result = wilcoxon_signed_rank([1.0, -1.0, 2.0, -2.0, 3.0, -3.0])
    assert result.statistic == 10.5
    assert result.pvalue == 1.0


def test_known_sample():
    d = [6, 8, 14, 16, 23, 24, 28, 29, 41, -48, 49, 56, 60, -67, 75]
    result = wilcoxon_signed_rank(d)
    assert result.statistic == 96.0
    assert result.pvalue == pytest.approx(0.041259765625, abs=1e-12)


def test_null_counts():
    assert list(exact_null_counts([1, 2, 3])[::2]) == [1, 1, 1, 2, 1, 1, 1]
    counts = exact_null_counts([1.5, 1.5, 3.0])
    assert counts.sum() == 8
    # ranks doubled: 3, 3, 6
    assert counts[3] == 2 and counts[6] == 2 and counts[12] == 1


@settings(deadline=None, max_examples=100)
@given(
    st.lists(st.integers(-6, 6).filter(lambda v: v != 0), min_size=1, max_size=10)
)
def test_exact_matches_brute_force(d):
    result = wilcoxon_signed_rank(np.array(d, dtype=float), method="exact")
    assert result.pvalue == pytest.approx(brute_force_pvalue(d), abs=1e-12)


def test_small_sample_warns():
    with pytest.warns(UserWarning, match="nonzero differences"):
        result = wilcoxon_signed_rank([1.0, 2.0, 3.0])
    assert result.pvalue == 0.25


def test_normal_approximation():
    rs = np.random.RandomState(0)
    d = rs.normal(0.5, 1.0, 40)
    result = wilcoxon_signed_rank(d)
    assert result.method == "normal"
    n = 40
    z = (result.statistic - n * (n + 1) / 4) / math.sqrt(
        n * (n + 1) * (2 * n + 1) / 24
    )
    assert result.zstatistic == pytest.approx(z)
    assert result.pvalue == pytest.approx(2 * sps.norm.sf(abs(z)))
    flipped = wilcoxon_signed_rank(-d)
    assert flipped.pvalue == pytest.approx(result.pvalue)
    assert flipped.zstatistic == pytest.approx(-result.zstatistic)
    # the normal tail tracks the exact one at moderate n
    small = rs.normal(0.3, 1.0, 18)
    exact = wilcoxon_signed_rank(small, method="exact").pvalue
    normal = wilcoxon_signed_rank(small, method="normal").pvalue
    assert normal == pytest.approx(exact, abs=0.05)


def test_invalid_samples():
    with pytest.raises(DegenerateSampleError):
        wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="shape"):
        wilcoxon_signed_rank([1.0, 2.0], [1.0])
    with pytest.raises(ValueError, match="NaN"):
        wilcoxon_signed_rank([1.0, np.nan])
    with pytest.raises(ValueError, match="method"):
        wilcoxon_signed_rank([1.0], method="bootstrap")


def test_correlations():
    x = np.arange(10.0)
    assert pearson_r(x, 3.0 * x + 1.0) == pytest.approx(1.0)
    assert pearson_r(x, -x) == pytest.approx(-1.0)
    assert spearman_rho(x, np.exp(x)) == pytest.approx(1.0)
    with pytest.raises(DegenerateSampleError):
        pearson_r(x, np.ones(10))
    with pytest.raises(DegenerateSampleError):
        spearman_rho(np.ones(10), x)
    with pytest.raises(ValueError, match="paired"):
        pearson_r([1.0], [2.0])


def test_paired_wilcoxon_tables():
    seeds = list(range(6))
    left = pd.DataFrame(
        {
            "variant": "auction",
            "seed": seeds,
            "fleet_energy": [100.0 + s for s in seeds],
        }
    )
    right = pd.DataFrame(
        {
            "variant": "nearest",
            "seed": seeds[::-1],
            "fleet_energy": [120.0 + s for s in seeds[::-1]],
        }
    )
    result = paired_wilcoxon(left, right, "fleet_energy")
    assert result.statistic == 0.0
    assert result.pvalue == 0.03125
    keyed = paired_wilcoxon(left, right, "fleet_energy", on=["seed"])
    assert (keyed.statistic, keyed.pvalue) == (result.statistic, result.pvalue)
    with pytest.raises(ValueError, match="missing"):
        paired_wilcoxon(left, right, "makespan")
    with pytest.raises(ValueError, match="No shared key"):
        paired_wilcoxon(left[["fleet_energy"]], right[["fleet_energy"]], "fleet_energy")
    shifted = right.assign(seed=right["seed"] + 10)
    with pytest.raises(ValueError, match="No rows pair"):
        paired_wilcoxon(left, shifted, "fleet_energy", ["seed"])
