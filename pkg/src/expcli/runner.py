"""
expcli/runner.py

Sweep orchestration: load the training hour, obtain a policy (checkpoint,
fresh training, or a baseline), build the scenarios for an ExperimentSpec,
evaluate them on a bounded thread pool and persist results, plots and trends.

Each evaluation owns its simulator and policy instance; the trained network
is copied per task, so workers share nothing mutable. Rows are merged by a
(scenario label, seed) sort, independent of completion order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

from config import SimulatorConfig
from errors import ConfigError, SimulationInvariantError
from agent import (
    FixedTimePolicy,
    GreedyQPolicy,
    QNetwork,
    RandomPolicy,
    config_hash,
    load_checkpoint,
    save_checkpoint,
    train,
    write_training_curve,
)
from expcli.analysis import sensitivity_summary, trend_table, write_trends_csv
from expcli.experiment import ExperimentKind, ExperimentSpec
from expcli.plots import experiment_plots
from interfaces import SignalPolicy
from metrics import MetricsReport, ResultRow, aggregate, sort_rows, write_results_csv
from scenario import (
    Scenario,
    build_experiment_grid,
    generate_scenario,
    ingest_turn_counts,
    shuffle_departures,
)
from scenario.perturbation import cell_seed
from shiftcore import PhaseCounts, TrafficDistribution, normalize, phase_ks_distance
from simsignal import IntersectionSimulator, write_event_log

logger = logging.getLogger(__name__)

PolicyFactory = Callable[[], SignalPolicy]

CHECKPOINT_NAME = "checkpoint.json"
TRAINING_CURVE_NAME = "training_curve.csv"
RESULTS_NAME = "results.csv"
TRENDS_NAME = "trends.csv"


# ---------------------------------------------------------------------------
# Training data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainingData:
    hours: Tuple[Tuple[str, PhaseCounts], ...]
    train_label: str
    train_counts: PhaseCounts

    @property
    def p_train(self) -> TrafficDistribution:
        return normalize(self.train_counts)

    @property
    def train_volume(self) -> int:
        return self.train_counts.total


def load_training_data(turn_counts: Union[str, Path], training_label: Optional[str] = None) -> TrainingData:
    """Hourly counts from a turn-count file; the training hour is the earliest unless named."""
    path = Path(turn_counts)
    if not path.exists():
        raise ConfigError(f"Turn-count file not found: {path}")
    hours = tuple(ingest_turn_counts(path))
    if not hours:
        raise ConfigError(f"Turn-count file {path} holds no rows")
    by_label = dict(hours)
    label = training_label or hours[0][0]
    if label not in by_label:
        raise ConfigError(f"Training hour '{label}' not in {path}; available: {sorted(by_label)}")
    counts = by_label[label]
    if counts.total == 0:
        raise ConfigError(f"Training hour '{label}' has no vehicles")
    logger.info(f"Training hour {label}: {counts.total} vehicles, counts {counts.counts}")
    return TrainingData(hours=hours, train_label=label, train_counts=counts)


def training_scenarios(data: TrainingData, n: int, seed: int, duration_s: float = 3600.0) -> List[Scenario]:
    """`n` copies of the training hour differing only in departure times."""
    base = generate_scenario(data.train_counts, duration_s=duration_s, seed=seed, label=f"train_{data.train_label}")
    return [
        shuffle_departures(base, seed=cell_seed(seed, i, data.train_volume), label=f"{base.label}_shuffle_{i}")
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------

def obtain_network(spec: ExperimentSpec, data: TrainingData) -> QNetwork:
    """
    Load spec.checkpoint when it exists. Otherwise reuse a checkpoint in
    out_dir trained under the same TrainConfig, or train and save one.
    """
    if spec.checkpoint is not None and spec.checkpoint.exists():
        return load_checkpoint(spec.checkpoint).network

    path = spec.checkpoint or spec.out_dir / CHECKPOINT_NAME
    if spec.checkpoint is None and path.exists():
        checkpoint = load_checkpoint(path)
        if checkpoint.config_hash == config_hash(spec.agent):
            logger.info(f"Reusing checkpoint {path} trained under the current agent config")
            return checkpoint.network
        logger.info(f"Checkpoint {path} was trained under another agent config; retraining")

    scenarios = training_scenarios(data, spec.agent.n_training_scenarios, spec.agent.seed, spec.duration_s)
    result = train(lambda: IntersectionSimulator(spec.simulator), scenarios, spec.agent)
    save_checkpoint(result.network, path, spec.agent)
    write_training_curve(result.curve, path.parent / TRAINING_CURVE_NAME)
    return result.network


def make_policy_factory(policy: str, network: Optional[QNetwork] = None, elapsed_clip_s: float = 120.0) -> PolicyFactory:
    if policy == "fixed_time":
        return FixedTimePolicy
    if policy == "random":
        return RandomPolicy
    if network is None:
        raise ConfigError("The dqn policy needs a trained network")
    return lambda: GreedyQPolicy(network.copy(), elapsed_clip_s)


def prepare_policy(spec: ExperimentSpec, data: TrainingData) -> PolicyFactory:
    network = obtain_network(spec, data) if spec.policy == "dqn" else None
    return make_policy_factory(spec.policy, network, spec.simulator.elapsed_clip_s)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate_scenario(
    scenario: Scenario,
    policy: SignalPolicy,
    sim_config: Optional[SimulatorConfig] = None,
    seed: int = 0,
    event_log_path: Optional[Union[str, Path]] = None,
) -> MetricsReport:
    """Run one episode to completion under `policy` and aggregate its event log."""
    env = IntersectionSimulator(sim_config)
    obs = env.reset(scenario, seed=seed)
    policy.reset(seed)
    done = False
    while not done:
        obs, _, done, _ = env.step(policy.act(obs, env.valid_actions()))

    events = env.event_log()
    if event_log_path is not None:
        write_event_log(events, event_log_path)
    report = aggregate(events, free_flow_s=env.free_flow_s, generated=scenario.total)
    logger.info(
        f"{policy.name} on '{scenario.label}' (seed {seed}): throughput={report.normalized_throughput:.4f}, "
        f"ETT={report.mean_extended_travel_time_s:.1f}s, timed_out={report.timed_out}"
    )
    return report


@dataclass(frozen=True)
class EvaluationTask:
    scenario: Scenario
    seed: int


def evaluate_all(
    tasks: Sequence[EvaluationTask],
    policy_factory: PolicyFactory,
    p_train: TrafficDistribution,
    sim_config: Optional[SimulatorConfig] = None,
    workers: int = 1,
) -> List[ResultRow]:
    """Evaluate every task on at most `workers` threads; rows sorted by (label, seed)."""

    def run(task: EvaluationTask) -> ResultRow:
        report = evaluate_scenario(task.scenario, policy_factory(), sim_config, task.seed)
        return ResultRow(
            scenario_label=task.scenario.label,
            ks_distance=phase_ks_distance(p_train, task.scenario.distribution()),
            total_volume=task.scenario.total,
            seed=task.seed,
            report=report,
            target_ks=task.scenario.target_ks,
        )

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(run, tasks))
    return sort_rows(rows)


def audit_ks_distances(rows: Sequence[ResultRow], scenarios: Sequence[EvaluationTask], p_train: TrafficDistribution) -> None:
    """
    Recompute every row's KS distance from its scenario and check that swept
    cells sit within the rounding bound (1/total) of their target.
    """
    by_key = {(t.scenario.label, t.seed): t.scenario for t in scenarios}
    for row in rows:
        scenario = by_key[(row.scenario_label, row.seed)]
        recomputed = phase_ks_distance(p_train, scenario.distribution())
        if recomputed != row.ks_distance:
            raise SimulationInvariantError(
                f"Row {row.scenario_label}/{row.seed}: ks_distance {row.ks_distance} != recomputed {recomputed}"
            )
        if row.target_ks is not None and abs(recomputed - row.target_ks) > 1.0 / row.total_volume + 1e-12:
            logger.warning(
                f"Cell {row.scenario_label}: achieved KS {recomputed:.6f} is more than 1/{row.total_volume} "
                f"from target {row.target_ks:.6f}"
            )


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def build_scenarios(spec: ExperimentSpec, data: TrainingData, seed: int) -> List[Scenario]:
    """Scenarios of one seed's replicate of `spec`."""
    kind = spec.kind
    if kind is ExperimentKind.REAL_SCENARIOS:
        scenarios = []
        for index, (label, counts) in enumerate(data.hours):
            if counts.total == 0:
                logger.warning(f"Skipping hour {label}: no vehicles")
                continue
            scenarios.append(generate_scenario(
                counts, duration_s=spec.duration_s, seed=cell_seed(seed, index, counts.total), label=label,
            ))
        return scenarios

    if kind is ExperimentKind.FIXED_VOLUME_SWEEP:
        levels, volumes = spec.ks_levels, spec.volumes[:1] or [data.train_volume]
    elif kind is ExperimentKind.FIXED_DISTRIBUTION_SWEEP:
        levels, volumes = [0.0], sorted(set(spec.volumes) | {data.train_volume})
    else:
        levels, volumes = spec.ks_levels, spec.volumes
    return build_experiment_grid(
        data.p_train, levels, volumes, seed=seed, mode=spec.mode, duration_s=spec.duration_s,
    )


@dataclass
class ExperimentOutcome:
    spec: ExperimentSpec
    rows: List[ResultRow]
    results_path: Path
    plot_paths: List[Path] = field(default_factory=list)
    trends_path: Optional[Path] = None


def run_experiment(
    spec: ExperimentSpec,
    policy_factory: Optional[PolicyFactory] = None,
    data: Optional[TrainingData] = None,
) -> ExperimentOutcome:
    """
    Evaluate every (scenario, seed) of `spec` and write results.csv, the
    figure set and trends.csv into spec.out_dir.
    """
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    data = data or load_training_data(spec.turn_counts, spec.training_label)
    policy_factory = policy_factory or prepare_policy(spec, data)

    tasks = [
        EvaluationTask(scenario, seed)
        for seed in spec.seeds
        for scenario in build_scenarios(spec, data, seed)
    ]
    logger.info(
        f"Experiment {spec.kind.value}: {len(tasks)} evaluations on {spec.workers} workers -> {spec.out_dir}"
    )
    p_train = data.p_train
    rows = evaluate_all(tasks, policy_factory, p_train, spec.simulator, spec.workers)
    audit_ks_distances(rows, tasks, p_train)

    outcome = ExperimentOutcome(spec=spec, rows=rows, results_path=write_results_csv(rows, spec.out_dir / RESULTS_NAME))

    if spec.kind in (ExperimentKind.FIXED_DISTRIBUTION_SWEEP, ExperimentKind.GRID):
        outcome.plot_paths += experiment_plots(rows, spec.out_dir, by="volume")
    if spec.kind is not ExperimentKind.FIXED_DISTRIBUTION_SWEEP:
        outcome.plot_paths += experiment_plots(rows, spec.out_dir, by="ks")

    trends = trend_table(rows)
    if trends:
        outcome.trends_path = write_trends_csv(trends + sensitivity_summary(trends), spec.out_dir / TRENDS_NAME)

    logger.info(f"Experiment {spec.kind.value} finished: {len(rows)} rows in {outcome.results_path}")
    return outcome
