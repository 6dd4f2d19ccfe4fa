"""Throughput, travel-time and delay measures from simulator event logs."""

from metrics.measures import (
    MetricsReport,
    aggregate,
    departure_delay,
    extended_travel_time,
    intersection_delay,
    normalized_throughput,
    travel_time,
)
from metrics.results import RESULTS_HEADER, ResultRow, read_results_csv, sort_rows, write_results_csv

__all__ = [
    "MetricsReport",
    "aggregate",
    "departure_delay",
    "extended_travel_time",
    "intersection_delay",
    "normalized_throughput",
    "travel_time",
    "RESULTS_HEADER",
    "ResultRow",
    "read_results_csv",
    "sort_rows",
    "write_results_csv",
]
