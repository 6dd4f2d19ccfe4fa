"""
tests/test_expcli.py

Tests for analysis, experiment orchestration and the command-line interface.

Covers:
  1. Linear trend fits and the sensitivity table
  2. The shift alarm
  3. KS nonlinearity report
  4. ExperimentSpec validation
  5. run_experiment on small sweeps (outputs, ordering, determinism)
  6. Training reuse through the checkpoint in out_dir
  7. Degradation of a trained controller under shift and volume (slow)
  8. CLI commands and exit codes
"""

import logging
from pathlib import Path

import pytest
import yaml
from scipy.stats import spearmanr

from config import SimulatorConfig, TrainConfig
from errors import ConfigError, DegenerateFit
from agent import FixedTimePolicy, train
from expcli import cli
from expcli.analysis import (
    TRENDS_HEADER,
    fit_trend,
    ks_nonlinearity_report,
    mean_by,
    row_level,
    sensitivity_summary,
    shift_alarm,
    trend_table,
)
from expcli.experiment import SAMPLE_TURN_COUNTS, ExperimentKind, ExperimentSpec
from expcli.runner import (
    load_training_data,
    make_policy_factory,
    obtain_network,
    run_experiment,
    training_scenarios,
)
from metrics import MetricsReport, ResultRow, read_results_csv
from scenario import PerturbationMode
from shiftcore import PHASES, PhaseCounts, TrafficDistribution, normalize

SMALL_HOURS = {
    "2023-03-14T07:00:00": (4, 12, 3, 6, 4, 11, 4, 6),
    "2023-03-14T08:00:00": (5, 11, 3, 6, 4, 12, 4, 5),
}
P_SAMPLE = normalize(PhaseCounts((210, 1150, 180, 420, 230, 1080, 270, 438)))


def make_turn_counts(tmp_path: Path) -> Path:
    """A two-hour turn-count file light enough to simulate quickly."""
    lines = ["period_start,phase,volume,bucket_minutes"]
    for start, counts in SMALL_HOURS.items():
        lines += [f"{start},{phase},{volume},60" for phase, volume in zip(PHASES, counts)]
    path = tmp_path / "counts.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def make_config_file(tmp_path: Path, **experiment) -> Path:
    """YAML config with short scenarios and two workers."""
    doc = {
        "logging": {"log_level": "WARNING"},
        "agent": {
            "total_env_steps": 60, "learning_starts": 10, "batch_size": 8,
            "hidden_sizes": [8], "n_training_scenarios": 2, "epsilon_decay_steps": 1000,
        },
        "experiment": {"duration_s": 120.0, "workers": 2, **experiment},
    }
    path = tmp_path / "shiftbench_config.yaml"
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return path


def make_row(label: str, ks: float, volume: int, throughput: float, seed: int = 0) -> ResultRow:
    report = MetricsReport(throughput, 100.0 * ks + volume / 100.0, 50.0, 30.0, volume, volume, 0)
    return ResultRow(label, ks, volume, seed, report, target_ks=ks)


# ============================================================================
# TREND TESTS
# ============================================================================

class TestTrends:
    """Least-squares trends with rank correlation."""

    def test_exact_line(self):
        """Points on a line recover its slope and intercept."""
        fit = fit_trend([(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)])
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.spearman_rho == pytest.approx(1.0)

    def test_constant_metric(self):
        """A flat metric has zero slope."""
        fit = fit_trend([(0.0, 0.9), (0.1, 0.9), (0.2, 0.9)])
        assert fit.slope == pytest.approx(0.0)

    def test_anti_monotone(self):
        """A strictly decreasing metric has Spearman rho -1."""
        fit = fit_trend([(0.0, 1.0), (0.1, 0.7), (0.2, 0.69), (0.3, 0.1)])
        assert fit.spearman_rho == pytest.approx(-1.0)
        assert fit.slope < 0

    def test_degenerate(self):
        """A single x value cannot be fitted."""
        with pytest.raises(DegenerateFit):
            fit_trend([(0.1, 1.0), (0.1, 2.0)])

    def test_trend_table_axes(self):
        """Volume trends per KS level, KS trends per volume."""
        rows = [
            make_row(f"ks={ks}_vol={vol}", ks, vol, 1.0 - ks)
            for ks in (0.0, 0.1, 0.2) for vol in (4000, 5000)
        ]
        trends = trend_table(rows)
        throughput_ks = [t for t in trends if t.axis == "ks" and t.metric == "normalized_throughput"]
        assert [t.group for t in throughput_ks] == ["4000", "5000"]
        assert throughput_ks[0].fit.slope == pytest.approx(-1.0)
        assert throughput_ks[0].change_per_step == pytest.approx(-0.02)
        ett_volume = [t for t in trends if t.axis == "volume" and t.metric == "mean_ett_s"]
        assert len(ett_volume) == 3
        assert ett_volume[0].change_per_step == pytest.approx(5.0)

        summary = sensitivity_summary(trends)
        assert all(t.group == "all" for t in summary)
        assert {(t.axis, t.metric) for t in summary} >= {("ks", "normalized_throughput"), ("volume", "mean_ett_s")}


# ============================================================================
# ALARM TESTS
# ============================================================================

class TestShiftAlarm:
    """Threshold alarm on the phase KS distance."""

    def test_identical_ok(self):
        """No shift, no alarm."""
        assert shift_alarm(P_SAMPLE, P_SAMPLE).status == "ok"

    def test_strict_threshold(self):
        """A distance equal to the threshold does not alarm."""
        a = TrafficDistribution((0.5, 0.5, 0, 0, 0, 0, 0, 0))
        b = TrafficDistribution((0.25, 0.75, 0, 0, 0, 0, 0, 0))
        assert shift_alarm(a, b, threshold=0.25).status == "ok"
        assert shift_alarm(a, b, threshold=0.2).alarm

    def test_evening_hour_alarms(self):
        """An hour at KS 0.069 alarms against the default 0.04."""
        evening = normalize(PhaseCounts((245, 1380, 175, 340, 205, 855, 245, 410)))
        result = shift_alarm(P_SAMPLE, evening)
        assert result.status == "alarm"
        assert result.distance == pytest.approx(0.0689, abs=1e-4)

    @pytest.mark.parametrize("threshold", [0.0, -0.1, 1.5])
    def test_bad_threshold(self, threshold):
        """Thresholds must lie in (0, 1]."""
        with pytest.raises(ValueError):
            shift_alarm(P_SAMPLE, P_SAMPLE, threshold)


# ============================================================================
# NONLINEARITY TESTS
# ============================================================================

class TestNonlinearity:
    """KS distance against cumulative difference."""

    def test_concentrated_is_linear(self):
        """Concentrated shifts move exactly 2D in total."""
        rows = ks_nonlinearity_report(P_SAMPLE, [0.0, 0.02, 0.04], mode=PerturbationMode.CONCENTRATED)
        assert [r.cumulative_difference for r in rows] == pytest.approx([0.0, 0.04, 0.08])

    def test_spread_steeper_at_small_d(self):
        """Spread shifts give at least three times D in total at small D."""
        rows = ks_nonlinearity_report(P_SAMPLE, [0.02, 0.04], mode=PerturbationMode.SPREAD, seed=0)
        for row in rows:
            assert row.cumulative_difference >= 3 * row.ks_distance


# ============================================================================
# EXPERIMENT SPEC TESTS
# ============================================================================

class TestExperimentSpec:
    """Sweep validation."""

    def test_grid_needs_volumes(self):
        """A grid with no volumes is a configuration error."""
        with pytest.raises(ConfigError):
            ExperimentSpec.create(kind=ExperimentKind.GRID, ks_levels=[0.0, 0.1], volumes=[])

    def test_bad_level(self):
        """KS levels outside [0, 1] are rejected."""
        with pytest.raises(ConfigError):
            ExperimentSpec.create(kind=ExperimentKind.FIXED_VOLUME_SWEEP, ks_levels=[1.2])

    def test_unknown_policy(self):
        """Only dqn, fixed_time and random are known."""
        with pytest.raises(ConfigError):
            ExperimentSpec.create(kind=ExperimentKind.REAL_SCENARIOS, policy="max_pressure")

    def test_empty_seeds(self):
        """At least one seed is required."""
        with pytest.raises(ConfigError):
            ExperimentSpec.create(kind=ExperimentKind.REAL_SCENARIOS, seeds=[])


# ============================================================================
# RUNNER TESTS
# ============================================================================

class TestRunExperiment:
    """Small sweeps under the fixed-time controller."""

    def make_spec(self, tmp_path: Path, out: str, kind=ExperimentKind.GRID, **fields) -> ExperimentSpec:
        defaults = dict(
            kind=kind, ks_levels=[0.0, 0.08], volumes=[40, 60], seeds=[0, 1],
            turn_counts=make_turn_counts(tmp_path), policy="fixed_time", duration_s=120.0,
            workers=2, out_dir=tmp_path / out,
        )
        defaults.update(fields)
        return ExperimentSpec.create(**defaults)

    def test_grid_outputs(self, tmp_path):
        """Every cell and seed is evaluated; results, plots and trends are written."""
        outcome = run_experiment(self.make_spec(tmp_path, "grid"), policy_factory=FixedTimePolicy)
        assert len(outcome.rows) == 2 * 2 * 2
        assert [(r.scenario_label, r.seed) for r in outcome.rows] == sorted(
            (r.scenario_label, r.seed) for r in outcome.rows
        )
        rows = read_results_csv(outcome.results_path)
        assert {r["total_volume"] for r in rows} == {40, 60}
        names = {p.name for p in outcome.plot_paths}
        assert "normalized_throughput_vs_volume.svg" in names
        assert "mean_ett_s_vs_ks.svg" in names
        assert all(p.exists() for p in outcome.plot_paths)
        header = outcome.trends_path.read_text(encoding="utf-8").splitlines()[0]
        assert header == ",".join(TRENDS_HEADER)

    def test_ks_within_rounding(self, tmp_path):
        """Achieved distances sit within 1/volume of their targets."""
        outcome = run_experiment(self.make_spec(tmp_path, "grid"), policy_factory=FixedTimePolicy)
        for row in outcome.rows:
            assert abs(row.ks_distance - row.target_ks) < 1.0 / row.total_volume

    def test_deterministic_outputs(self, tmp_path):
        """Same spec, same bytes, whatever the worker count."""
        a = run_experiment(self.make_spec(tmp_path, "a", workers=1), policy_factory=FixedTimePolicy)
        b = run_experiment(self.make_spec(tmp_path, "b", workers=3), policy_factory=FixedTimePolicy)
        assert a.results_path.read_bytes() == b.results_path.read_bytes()
        for pa, pb in zip(sorted(a.plot_paths), sorted(b.plot_paths)):
            assert pa.read_bytes() == pb.read_bytes()

    def test_real_scenarios(self, tmp_path):
        """One row per turn-count hour, labelled by hour."""
        spec = self.make_spec(tmp_path, "real", kind=ExperimentKind.REAL_SCENARIOS, seeds=[0])
        outcome = run_experiment(spec, policy_factory=FixedTimePolicy)
        assert [r.scenario_label for r in outcome.rows] == ["2023-03-14T07:00", "2023-03-14T08:00"]
        assert outcome.rows[0].ks_distance == 0.0

    def test_fixed_distribution_adds_training_volume(self, tmp_path):
        """The training volume is always part of the volume sweep."""
        spec = self.make_spec(tmp_path, "fd", kind=ExperimentKind.FIXED_DISTRIBUTION_SWEEP, seeds=[0])
        outcome = run_experiment(spec, policy_factory=FixedTimePolicy)
        assert sorted(r.total_volume for r in outcome.rows) == [40, 50, 60]
        assert all(r.ks_distance < 1.0 / r.total_volume for r in outcome.rows)

    def test_checkpoint_reused(self, tmp_path, caplog):
        """A second run with the same agent config reuses the saved checkpoint."""
        agent = TrainConfig(total_env_steps=40, learning_starts=10, batch_size=8, hidden_sizes=[8],
                            n_training_scenarios=2)
        spec = self.make_spec(tmp_path, "dqn", kind=ExperimentKind.REAL_SCENARIOS, policy="dqn", agent=agent,
                              simulator=SimulatorConfig())
        data = load_training_data(spec.turn_counts)
        spec.out_dir.mkdir(parents=True)
        obtain_network(spec, data)
        assert (spec.out_dir / "checkpoint.json").exists()
        assert (spec.out_dir / "training_curve.csv").exists()
        with caplog.at_level(logging.INFO, logger="expcli.runner"):
            obtain_network(spec, data)
        assert "Reusing checkpoint" in caplog.text

    def test_training_scenarios_share_counts(self, tmp_path):
        """Training copies differ only in departure times."""
        data = load_training_data(make_turn_counts(tmp_path))
        scenarios = training_scenarios(data, 3, seed=0, duration_s=120.0)
        assert len({s.label for s in scenarios}) == 3
        assert all(s.phase_counts() == data.train_counts for s in scenarios)

    def test_unknown_training_label(self, tmp_path):
        """Naming a missing hour is a configuration error."""
        with pytest.raises(ConfigError):
            load_training_data(make_turn_counts(tmp_path), "1999-01-01T00:00")


# ============================================================================
# SHIFT DEGRADATION TESTS
# ============================================================================

@pytest.fixture(scope="module")
def trained_dqn():
    """One default training run on the sample training hour, shared by the sweeps below."""
    data = load_training_data(SAMPLE_TURN_COUNTS)
    cfg = TrainConfig()
    network = train(None, training_scenarios(data, cfg.n_training_scenarios, cfg.seed), cfg).network
    return data, make_policy_factory("dqn", network)


@pytest.mark.slow
class TestShiftDegradation:
    """A trained controller loses performance as shift and volume grow."""

    def sweep(self, trained_dqn, out_dir: Path, kind, ks_levels, volumes):
        data, factory = trained_dqn
        spec = ExperimentSpec.create(
            kind=kind, ks_levels=ks_levels, volumes=volumes, seeds=[0, 1, 2], policy="dqn",
            workers=4, out_dir=out_dir,
        )
        return run_experiment(spec, policy_factory=factory, data=data).rows

    def test_fixed_volume_rank_correlation(self, trained_dqn, tmp_path):
        """At the training volume throughput falls and ETT rises with KS distance."""
        levels = [0.0, 0.02, 0.04, 0.08, 0.16]
        rows = self.sweep(trained_dqn, tmp_path, ExperimentKind.FIXED_VOLUME_SWEEP, levels, [])
        throughput = mean_by(rows, row_level, "normalized_throughput")
        ett = mean_by(rows, row_level, "mean_ett_s")
        assert sorted(throughput) == levels
        assert spearmanr(levels, [throughput[k] for k in levels])[0] <= -0.8
        assert spearmanr(levels, [ett[k] for k in levels])[0] >= 0.8

    def test_volume_past_training_degrades(self, trained_dqn, tmp_path):
        """Above the training volume throughput never rises and ETT never falls."""
        data, _ = trained_dqn
        volumes = [2000, 3000, 4000, 5000, 6000, 7000]
        rows = self.sweep(trained_dqn, tmp_path, ExperimentKind.FIXED_DISTRIBUTION_SWEEP, [0.0], volumes)
        throughput = mean_by(rows, lambda r: r.total_volume, "normalized_throughput")
        ett = mean_by(rows, lambda r: r.total_volume, "mean_ett_s")
        above = [v for v in volumes if v > data.train_volume]
        assert len(above) >= 3
        for low, high in zip(above, above[1:]):
            assert throughput[high] <= throughput[low]
            assert ett[high] >= ett[low]

    def test_grid_shift_costs_throughput(self, trained_dqn, tmp_path):
        """At every volume the unshifted demand is served at least as well as KS 0.4."""
        volumes = [4000, 5000, 6000]
        rows = self.sweep(trained_dqn, tmp_path, ExperimentKind.GRID, [0.0, 0.2, 0.4], volumes)
        throughput = mean_by(rows, lambda r: (row_level(r), r.total_volume), "normalized_throughput")
        for volume in volumes:
            assert throughput[(0.0, volume)] >= throughput[(0.4, volume)]


# ============================================================================
# CLI TESTS
# ============================================================================

class TestCli:
    """Commands, outputs and exit codes."""

    def test_alarm_on_sample_evening(self, tmp_path, capsys):
        """The evening sample hour alarms against the morning training hour."""
        config = make_config_file(tmp_path)
        code = cli.main(["alarm", "--config", str(config), "--observed", "2023-03-14T17:00"])
        assert code == cli.EXIT_OK
        assert capsys.readouterr().out.startswith("alarm: KS distance 0.0689")

    def test_alarm_ok_hour(self, tmp_path, capsys):
        """The 08:00 sample hour stays below the threshold."""
        config = make_config_file(tmp_path)
        assert cli.main(["alarm", "--config", str(config), "--observed", "2023-03-14T08:00"]) == 0
        assert capsys.readouterr().out.startswith("ok:")

    def test_alarm_unknown_hour(self, tmp_path):
        """An hour absent from the file exits with the config code."""
        config = make_config_file(tmp_path)
        assert cli.main(["alarm", "--config", str(config), "--observed", "2099-01-01T00:00"]) == cli.EXIT_CONFIG

    def test_invalid_config_file(self, tmp_path):
        """A config that fails validation exits with code 2."""
        path = tmp_path / "bad.yaml"
        path.write_text("simulator:\n  yellow_s: 0\n", encoding="utf-8")
        assert cli.main(["alarm", "--config", str(path), "--observed", "2023-03-14T08:00"]) == cli.EXIT_CONFIG

    def test_missing_turn_counts(self, tmp_path):
        """A missing turn-count file is a configuration error."""
        config = make_config_file(tmp_path)
        code = cli.main(["alarm", "--config", str(config), "--turn-counts", str(tmp_path / "nope.csv"),
                         "--observed", "x"])
        assert code == cli.EXIT_CONFIG

    def test_generate(self, tmp_path):
        """One scenario file per grid cell."""
        config = make_config_file(tmp_path)
        code = cli.main(["generate", "--config", str(config), "--turn-counts", str(make_turn_counts(tmp_path)),
                         "--ks-levels", "0,0.1", "--volumes", "40,60", "--out-dir", str(tmp_path / "out")])
        assert code == 0
        assert len(list((tmp_path / "out" / "scenarios").glob("*.json"))) == 4

    def test_evaluate_with_event_log(self, tmp_path):
        """Evaluating a generated scenario writes results and the event log."""
        config = make_config_file(tmp_path)
        counts = str(make_turn_counts(tmp_path))
        out = tmp_path / "out"
        assert cli.main(["generate", "--config", str(config), "--turn-counts", counts,
                         "--ks-levels", "0.04", "--volumes", "50", "--out-dir", str(out)]) == 0
        scenario, = (out / "scenarios").glob("*.json")
        code = cli.main(["evaluate", str(scenario), "--config", str(config), "--turn-counts", counts,
                         "--policy", "fixed_time", "--event-log", str(out / "events.csv"), "--out-dir", str(out)])
        assert code == 0
        assert len((out / "events.csv").read_text(encoding="utf-8").splitlines()) == 51
        assert (out / "evaluate_fixed_time.csv").exists()

    def test_ks_report(self, tmp_path):
        """The nonlinearity table and figure are written."""
        config = make_config_file(tmp_path)
        out = tmp_path / "out"
        assert cli.main(["ks-report", "--config", str(config), "--out-dir", str(out)]) == 0
        lines = (out / "ks_nonlinearity.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "ks_distance,cumulative_difference"
        assert len(lines) == 8
        assert (out / "ks_nonlinearity.svg").exists()

    def test_experiment_two_fixed_time(self, tmp_path):
        """Experiment 2 writes both sweeps under experiment2/."""
        config = make_config_file(tmp_path)
        out = tmp_path / "out"
        code = cli.main(["experiment", "2", "--config", str(config), "--policy", "fixed_time",
                         "--turn-counts", str(make_turn_counts(tmp_path)), "--ks-levels", "0,0.04,0.08",
                         "--volumes", "40,80", "--out-dir", str(out)])
        assert code == 0
        fixed_volume = read_results_csv(out / "experiment2" / "fixed_volume" / "results.csv")
        fixed_distribution = read_results_csv(out / "experiment2" / "fixed_distribution" / "results.csv")
        assert len(fixed_volume) == 3
        assert {r["total_volume"] for r in fixed_volume} == {50}
        assert sorted(r["total_volume"] for r in fixed_distribution) == [40, 50, 80]
        assert (out / "experiment2" / "fixed_volume" / "trends.csv").exists()

    def test_experiment_one_dqn(self, tmp_path):
        """Experiment 1 trains a small agent and evaluates every hour."""
        config = make_config_file(tmp_path)
        out = tmp_path / "out"
        code = cli.main(["experiment", "1", "--config", str(config),
                         "--turn-counts", str(make_turn_counts(tmp_path)), "--out-dir", str(out)])
        assert code == 0
        assert (out / "experiment1" / "checkpoint.json").exists()
        assert len(read_results_csv(out / "experiment1" / "results.csv")) == 2
