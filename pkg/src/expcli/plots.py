"""
expcli/plots.py

Static SVG figures for experiment outputs.

Each SVG embeds the plotted series as JSON in its <desc> metadata, and the
date stamp and element ids are pinned so reruns produce identical files.
"""

import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from expcli.analysis import NonlinearityRow, mean_by, row_level  # noqa: E402
from metrics import ResultRow  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "shiftbench"

METRIC_LABELS: Dict[str, str] = {
    "normalized_throughput": "Normalized throughput",
    "mean_ett_s": "Mean extended travel time (s)",
    "mean_tt_s": "Mean travel time (s)",
    "mean_delay_s": "Mean intersection delay (s)",
}

Series = Dict[str, List[Tuple[float, float]]]


def _save(fig, path: Path, series: Series) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(
        path,
        format="svg",
        metadata={"Date": None, "Description": json.dumps(series, sort_keys=True)},
    )
    plt.close(fig)
    logger.info(f"Wrote plot {path}")
    return path


def line_plot(series: Series, path: Union[str, Path], xlabel: str, ylabel: str, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in sorted(series, key=_series_order):
        points = sorted(series[name])
        ax.plot([p[0] for p in points], [p[1] for p in points], "-o", markersize=3, label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, Path(path), series)


def _series_order(name: str):
    try:
        return (0, float(name.split("=")[-1]))
    except ValueError:
        return (1, name)


def metric_vs_volume(rows: Sequence[ResultRow], metric: str, path: Union[str, Path]) -> Path:
    """One curve per KS level, seed-averaged."""
    groups = defaultdict(list)
    for row in rows:
        groups[row_level(row)].append(row)
    series: Series = {
        f"KS={level:.2f}": sorted(mean_by(g, lambda r: float(r.total_volume), metric).items())
        for level, g in sorted(groups.items())
    }
    label = METRIC_LABELS[metric]
    return line_plot(series, path, "Total vehicle volume", label, f"{label} vs volume")


def metric_vs_ks(rows: Sequence[ResultRow], metric: str, path: Union[str, Path]) -> Path:
    """One curve per volume, x = measured KS distance, seed-averaged."""
    groups = defaultdict(list)
    for row in rows:
        groups[row.total_volume].append(row)
    series: Series = {
        f"vol={volume}": sorted(mean_by(g, lambda r: r.ks_distance, metric).items())
        for volume, g in sorted(groups.items())
    }
    label = METRIC_LABELS[metric]
    return line_plot(series, path, "Phase KS distance", label, f"{label} vs phase KS distance")


def nonlinearity_plot(rows: Sequence[NonlinearityRow], path: Union[str, Path]) -> Path:
    series: Series = {"cumulative": [(r.ks_distance, r.cumulative_difference) for r in rows]}
    return line_plot(
        series, path, "Phase KS distance", "Cumulative difference", "Cumulative difference vs KS distance"
    )


def experiment_plots(rows: Sequence[ResultRow], out_dir: Union[str, Path], by: str) -> List[Path]:
    """
    Standard figure set: `by="volume"` draws metric-vs-volume families keyed by
    KS level, `by="ks"` draws metric-vs-KS curves keyed by volume.
    """
    out_dir = Path(out_dir)
    draw = metric_vs_volume if by == "volume" else metric_vs_ks
    return [draw(rows, metric, out_dir / f"{metric}_vs_{by}.svg") for metric in METRIC_LABELS]
