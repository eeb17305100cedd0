import math

import pandas as pd
import pytest

from amrfleet.metrics import (
    MetricsReport,
    paired_energies,
    paired_pvalue,
    savings,
)
from amrfleet.rescheduler import EventLog, EventLogEntry


def results_table():
    rows = []
    for n_robots, saving in ((2, 0.05), (4, 0.10)):
        for seed in range(6):
            base = 1000.0 + 10.0 * seed
            rows.append(("B3", n_robots, seed, base, "ok"))
            rows.append(("auction", n_robots, seed, base * (1 - saving), "ok"))
    rows.append(("auction", 2, 6, 1.0, "error"))
    return pd.DataFrame(
        rows, columns=["variant", "n_robots", "seed", "fleet_energy", "status"]
    )


def test_savings():
    assert savings(100.0, 80.0) == pytest.approx(20.0)
    assert savings(100.0, 120.0) == pytest.approx(-20.0)
    with pytest.raises(ValueError, match="Baseline energy"):
        savings(0.0, 1.0)


def test_paired_energies_skip_failed_runs():
    pairs = paired_energies(results_table(), "auction", "B3", ["n_robots", "seed"])
    assert len(pairs) == 12
    assert list(pairs.columns) == ["n_robots", "seed", "base", "variant"]
    assert (pairs["variant"] < pairs["base"]).all()


def test_paired_pvalue():
    assert math.isnan(paired_pvalue([], []))
    assert math.isnan(paired_pvalue([1.0, 2.0], [1.0, 2.0]))
    assert paired_pvalue([2.0] * 6, [1.0] * 6) == 0.03125
    # too few pairs for significance still gives a p
    assert paired_pvalue([2.0, 3.0], [1.0, 1.0]) == 0.5


def test_metrics_report():
    entry = EventLogEntry(12.0, "fault", (1,), 3, 0.002, 50.0, 40.0, 1.5)
    log = EventLog([entry])
    report = MetricsReport.from_results(
        results_table(), ["n_robots"], ["B3"], event_logs=[log, EventLog([entry])]
    )
    summary = report.summary.set_index(["n_robots", "variant"])
    assert len(summary) == 4
    assert summary.loc[(2, "auction"), "seeds"] == 6
    assert summary.loc[(2, "auction"), "savings_vs_B3_mean"] == pytest.approx(5.0)
    assert summary.loc[(4, "auction"), "savings_vs_B3_mean"] == pytest.approx(10.0)
    assert summary.loc[(4, "auction"), "p_vs_B3"] == 0.03125
    assert summary.loc[(2, "B3"), "savings_vs_B3_mean"] == 0.0
    assert math.isnan(summary.loc[(2, "B3"), "p_vs_B3"])
    assert summary.loc[(2, "B3"), "energy_mean"] == pytest.approx(1025.0)
    assert report.savings_trend("auction", "B3") == pytest.approx(1.0)
    assert report.reschedules["count"].iloc[0] == 2
    assert report.reschedules["overhead_vs_cold_pct"].iloc[0] == pytest.approx(1.5)
    out = report.to_dict()
    assert out["baselines"] == ["B3"]
    assert len(out["summary"]) == 4
    assert "Metrics Report" in str(report)


def test_metrics_report_without_baselines():
    report = MetricsReport.from_results(results_table(), ["n_robots"], [])
    assert "energy_std" in report.summary.columns
    assert report.reschedules.empty
