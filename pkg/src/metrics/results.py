"""
metrics/results.py

Results CSV: one row per (scenario, seed), sorted by (label, seed), floats in
fixed-point so identical runs produce byte-identical files.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Union

from errors import ParseError
from metrics.measures import MetricsReport

RESULTS_HEADER = (
    "scenario_label",
    "ks_distance",
    "total_volume",
    "seed",
    "normalized_throughput",
    "mean_ett_s",
    "mean_tt_s",
    "mean_delay_s",
    "timed_out",
)


@dataclass(frozen=True)
class ResultRow:
    scenario_label: str
    ks_distance: float
    total_volume: int
    seed: int
    report: MetricsReport
    # nominal sweep level; grouping key for plots, not written to the CSV
    target_ks: Optional[float] = None

    @property
    def sort_key(self):
        return (self.scenario_label, self.seed)


def _fmt(value: float, digits: int) -> str:
    if math.isnan(value):
        return "nan"
    return f"{value:.{digits}f}"


def sort_rows(rows: Iterable[ResultRow]) -> List[ResultRow]:
    return sorted(rows, key=lambda r: r.sort_key)


def write_results_csv(rows: Iterable[ResultRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for row in sort_rows(rows):
            r = row.report
            writer.writerow([
                row.scenario_label,
                _fmt(row.ks_distance, 9),
                row.total_volume,
                row.seed,
                _fmt(r.normalized_throughput, 6),
                _fmt(r.mean_extended_travel_time_s, 4),
                _fmt(r.mean_travel_time_s, 4),
                _fmt(r.mean_delay_s, 4),
                r.timed_out,
            ])
    return path


def read_results_csv(path: Union[str, Path]) -> List[dict]:
    """Rows as dicts with numeric columns converted."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != RESULTS_HEADER:
            raise ParseError(f"{path} does not have the results header {','.join(RESULTS_HEADER)}", line=1)
        rows = []
        for line, raw in enumerate(reader, start=2):
            try:
                rows.append({
                    "scenario_label": raw["scenario_label"],
                    "ks_distance": float(raw["ks_distance"]),
                    "total_volume": int(raw["total_volume"]),
                    "seed": int(raw["seed"]),
                    "normalized_throughput": float(raw["normalized_throughput"]),
                    "mean_ett_s": float(raw["mean_ett_s"]),
                    "mean_tt_s": float(raw["mean_tt_s"]),
                    "mean_delay_s": float(raw["mean_delay_s"]),
                    "timed_out": int(raw["timed_out"]),
                })
            except (TypeError, ValueError) as e:
                raise ParseError(f"bad results row: {e}", line=line) from e
    return rows
