"""Aggregation of per-run results into savings, accuracy and significance
tables."""
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

from .exceptions import DegenerateSampleError
from .rescheduler import EventLog
from .stats import spearman_rho, wilcoxon_signed_rank

ENERGY_COLUMN = "fleet_energy"


def savings(e_base: float, e_variant: float) -> float:
    """Percentage of the baseline's energy saved by the variant."""
    if not e_base > 0.0:
        raise ValueError("Baseline energy must be > 0, got {}".format(e_base))
    return (e_base - e_variant) / e_base * 100.0


def _mean_std(values: Sequence[float]) -> Any:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return math.nan, math.nan
    std = float(arr.std(ddof=1)) if arr.size >= 2 else math.nan
    return float(arr.mean()), std


def paired_energies(
    results: pd.DataFrame,
    variant: str,
    baseline: str,
    keys: Sequence[str],
    column: str = ENERGY_COLUMN,
) -> pd.DataFrame:
    """Rows of ``keys`` where both variants ran, with columns ``base`` and
    ``variant``."""
    ok = results[results["status"] == "ok"] if "status" in results else results
    left = ok[ok["variant"] == baseline][list(keys) + [column]]
    right = ok[ok["variant"] == variant][list(keys) + [column]]
    merged = left.merge(right, on=list(keys), suffixes=("_base", "_variant"))
    return merged.rename(
        columns={column + "_base": "base", column + "_variant": "variant"}
    ).sort_values(list(keys), ignore_index=True)


def paired_pvalue(base: Sequence[float], variant: Sequence[float]) -> float:
    """Two-sided Wilcoxon p of a paired comparison, NaN when undefined."""
    if len(base) == 0:
        return math.nan
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            return wilcoxon_signed_rank(base, variant).pvalue
    except DegenerateSampleError:
        return math.nan


@dataclass
class MetricsReport:
    """Seed-aggregated comparison of variants against baselines.

    ``summary`` holds one row per cell and variant: mean and std of fleet
    energy, the correlation and ranking columns averaged over seeds, and per
    baseline the mean and std of the savings in percent with the Wilcoxon p
    of the paired energies. ``reschedules`` summarises the event logs by
    disruption kind.
    """

    summary: pd.DataFrame
    reschedules: pd.DataFrame = field(default_factory=pd.DataFrame)
    baselines: List[str] = field(default_factory=list)

    @classmethod
    def from_results(
        cls,
        results: pd.DataFrame,
        cell_keys: Sequence[str],
        baselines: Sequence[str],
        seed_key: str = "seed",
        event_logs: Sequence[EventLog] = (),
    ) -> "MetricsReport":
        ok = results[results["status"] == "ok"] if "status" in results else results
        cell_keys = list(cell_keys)
        keys = cell_keys + [seed_key]
        rows = []
        groups = ok.groupby(cell_keys + ["variant"], sort=True, dropna=False)
        for group_key, group in groups:
            *cell, variant = group_key
            row: Dict[str, Any] = dict(zip(cell_keys, cell))
            row["variant"] = variant
            row["seeds"] = len(group)
            row["energy_mean"], row["energy_std"] = _mean_std(group[ENERGY_COLUMN])
            for column in ("r", "winner_accuracy", "mean_abs_rel_error"):
                if column in group:
                    values = group[column].dropna()
                    row[column] = float(values.mean()) if len(values) else math.nan
            in_cell = ok
            for k, v in zip(cell_keys, cell):
                in_cell = in_cell[in_cell[k] == v]
            for base in baselines:
                pairs = paired_energies(in_cell, variant, base, keys)
                s = [savings(b, v) for b, v in zip(pairs["base"], pairs["variant"])]
                mean, std = _mean_std(s)
                row["savings_vs_{}_mean".format(base)] = mean
                row["savings_vs_{}_std".format(base)] = std
                row["p_vs_{}".format(base)] = (
                    math.nan
                    if variant == base
                    else paired_pvalue(list(pairs["base"]), list(pairs["variant"]))
                )
            rows.append(row)
        merged = EventLog([e for log in event_logs for e in log.entries])
        return cls(pd.DataFrame(rows), merged.summary(), list(baselines))

    def savings_trend(self, variant: str, baseline: str, by: str = "n_robots") -> float:
        """Spearman correlation between ``by`` and mean savings."""
        rows = self.summary[self.summary["variant"] == variant]
        trend = rows.groupby(by)["savings_vs_{}_mean".format(baseline)].mean()
        return spearman_rho(trend.index.to_numpy(), trend.to_numpy())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "baselines": self.baselines,
            "summary": self.summary.to_dict(orient="records"),
            "reschedules": self.reschedules.to_dict(orient="records"),
        }

    def __str__(self) -> str:
        return "Metrics Report:\n{}\n{}".format(
            self.summary.to_string(index=False),
            self.reschedules.to_string(index=False),
        )
