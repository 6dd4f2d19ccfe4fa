"""
expcli/analysis.py

Post-run analysis: linear trends per curve, the shift alarm, and the
KS-vs-cumulative-difference table.
"""

import csv
import logging
import warnings
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from errors import DegenerateFit
from metrics import ResultRow
from scenario import PerturbationMode, perturb_to_ks
from shiftcore import TrafficDistribution, cumulative_difference, phase_ks_distance

logger = logging.getLogger(__name__)

# Sensitivity is reported per these increments of each axis
KS_STEP: float = 0.02
VOLUME_STEP: int = 500


# ---------------------------------------------------------------------------
# Linear trends
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrendFit:
    group: Optional[str]
    slope: float
    intercept: float
    r_value: float
    spearman_rho: float
    n_points: int


def fit_trend(points: Sequence[Tuple[float, float]], group: Optional[str] = None) -> TrendFit:
    """
    Ordinary least squares of metric on x, with Spearman rank correlation.

    Raises
    ------
    DegenerateFit
        If fewer than two distinct x values are present.
    """
    x = np.asarray([p[0] for p in points], dtype=float)
    y = np.asarray([p[1] for p in points], dtype=float)
    if np.unique(x).size < 2:
        raise DegenerateFit(f"Trend for group {group!r} needs at least two distinct x values")

    fit = stats.linregress(x, y)
    with warnings.catch_warnings():
        # constant metrics have no rank correlation
        warnings.simplefilter("ignore")
        rho = stats.spearmanr(x, y)[0]
    return TrendFit(
        group=group,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_value=float(fit.rvalue),
        spearman_rho=float(rho),
        n_points=int(x.size),
    )


TREND_METRICS: Dict[str, str] = {
    "normalized_throughput": "normalized_throughput",
    "mean_ett_s": "mean_extended_travel_time_s",
    "mean_tt_s": "mean_travel_time_s",
    "mean_delay_s": "mean_delay_s",
}

TRENDS_HEADER = (
    "axis", "group", "metric", "slope", "intercept", "r_value",
    "spearman_rho", "n_points", "change_per_step",
)


@dataclass(frozen=True)
class TrendRow:
    axis: str
    group: str
    metric: str
    fit: TrendFit
    change_per_step: float


def row_level(row: ResultRow) -> float:
    """Sweep level of a row: its nominal target, else the measured distance."""
    return round(row.target_ks if row.target_ks is not None else row.ks_distance, 6)


def mean_by(rows: Iterable[ResultRow], key, metric: str) -> Dict:
    """Seed-averaged metric per key, NaN runs skipped."""
    buckets = defaultdict(list)
    for row in rows:
        value = getattr(row.report, TREND_METRICS[metric])
        if not np.isnan(value):
            buckets[key(row)].append(value)
    return {k: float(np.mean(v)) for k, v in buckets.items() if v}


def trend_table(rows: Sequence[ResultRow]) -> List[TrendRow]:
    """
    Per-curve fits along both axes.

    "volume" rows fit each metric against total volume at one KS level;
    "ks" rows fit against the measured KS distance at one volume.
    Curves with fewer than two distinct x values are skipped.
    """
    out: List[TrendRow] = []
    for metric in TREND_METRICS:
        for axis, group_key, x_key, step in (
            ("volume", row_level, lambda r: float(r.total_volume), VOLUME_STEP),
            ("ks", lambda r: r.total_volume, lambda r: r.ks_distance, KS_STEP),
        ):
            groups = defaultdict(list)
            for row in rows:
                groups[group_key(row)].append(row)
            for group in sorted(groups):
                means = mean_by(groups[group], x_key, metric)
                try:
                    fit = fit_trend(sorted(means.items()), group=str(group))
                except DegenerateFit:
                    if logger.isEnabledFor(logging.DEBUG):
                        logger.debug(f"Skipping {axis} trend for {metric} at {group}: single x value")
                    continue
                out.append(TrendRow(axis, str(group), metric, fit, fit.slope * step))
    return out


def sensitivity_summary(trends: Sequence[TrendRow]) -> List[TrendRow]:
    """Mean change per KS_STEP and per VOLUME_STEP across curves, as 'all' rows."""
    summary: List[TrendRow] = []
    groups = defaultdict(list)
    for t in trends:
        groups[(t.axis, t.metric)].append(t)
    for (axis, metric), items in sorted(groups.items()):
        slopes = np.asarray([t.fit.slope for t in items])
        fit = TrendFit(
            group="all",
            slope=float(slopes.mean()),
            intercept=float(np.mean([t.fit.intercept for t in items])),
            r_value=float(np.nanmean([t.fit.r_value for t in items])),
            spearman_rho=float(np.nanmean([t.fit.spearman_rho for t in items])) if any(
                not np.isnan(t.fit.spearman_rho) for t in items) else float("nan"),
            n_points=sum(t.fit.n_points for t in items),
        )
        summary.append(TrendRow(axis, "all", metric, fit, float(np.mean([t.change_per_step for t in items]))))
    return summary


def write_trends_csv(trends: Sequence[TrendRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def fmt(v: float) -> str:
        return "nan" if np.isnan(v) else f"{v:.9g}"

    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRENDS_HEADER)
        for t in trends:
            writer.writerow([
                t.axis, t.group, t.metric, fmt(t.fit.slope), fmt(t.fit.intercept),
                fmt(t.fit.r_value), fmt(t.fit.spearman_rho), t.fit.n_points, fmt(t.change_per_step),
            ])
    return path


# ---------------------------------------------------------------------------
# Shift alarm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlarmResult:
    status: str
    distance: float
    threshold: float

    @property
    def alarm(self) -> bool:
        return self.status == "alarm"


def shift_alarm(p_ref: TrafficDistribution, p_obs: TrafficDistribution, threshold: float = 0.04) -> AlarmResult:
    """'alarm' when the phase KS distance strictly exceeds `threshold`, else 'ok'."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    distance = phase_ks_distance(p_ref, p_obs)
    status = "alarm" if distance > threshold else "ok"
    if status == "alarm":
        logger.warning(f"Shift alarm: KS distance {distance:.4f} exceeds threshold {threshold:.4f}")
    return AlarmResult(status=status, distance=distance, threshold=threshold)


# ---------------------------------------------------------------------------
# KS nonlinearity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonlinearityRow:
    ks_distance: float
    cumulative_difference: float


def ks_nonlinearity_report(
    p_train: TrafficDistribution,
    ks_levels: Sequence[float],
    mode: PerturbationMode = PerturbationMode.SPREAD,
    seed: int = 0,
) -> List[NonlinearityRow]:
    """
    Cumulative difference of the perturbed distribution at each KS level.

    One seed is used for every level, so all levels share one perturbation
    pattern and differ only in magnitude.
    """
    rows = []
    for level in ks_levels:
        q = perturb_to_ks(p_train, level, mode=mode, seed=seed)
        rows.append(NonlinearityRow(float(level), cumulative_difference(p_train, q)))
    return rows


def write_nonlinearity_csv(rows: Sequence[NonlinearityRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("ks_distance", "cumulative_difference"))
        for row in rows:
            writer.writerow([f"{row.ks_distance:.6f}", f"{row.cumulative_difference:.9f}"])
    return path
