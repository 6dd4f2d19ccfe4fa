"""
expcli/cli.py

Command-line entry point.

Usage:
  python shiftbench.py generate   --ks-levels 0,0.1 --volumes 4000,5000
  python shiftbench.py train      --steps 50000
  python shiftbench.py evaluate   --policy fixed_time --event-log events.csv
  python shiftbench.py experiment 2 --workers 8
  python shiftbench.py ks-report  --mode spread
  python shiftbench.py alarm      --observed 2023-03-14T17:00

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from config import ShiftbenchConfig, get_config, setup_logging
from errors import ConfigError, ShiftbenchError
from agent import POLICY_NAMES
from expcli.analysis import ks_nonlinearity_report, shift_alarm, write_nonlinearity_csv
from expcli.experiment import ExperimentKind, ExperimentSpec
from expcli.plots import nonlinearity_plot
from expcli.runner import (
    TrainingData,
    evaluate_scenario,
    load_training_data,
    make_policy_factory,
    obtain_network,
    run_experiment,
)
from metrics import ResultRow, write_results_csv
from scenario import (
    PerturbationMode,
    build_experiment_grid,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from shiftcore import NUM_PHASES, PhaseCounts, normalize, phase_ks_distance

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _phase_counts(text: str) -> PhaseCounts:
    values = _int_list(text)
    if len(values) != NUM_PHASES:
        raise argparse.ArgumentTypeError(f"expected {NUM_PHASES} comma-separated counts, got {len(values)}")
    try:
        return PhaseCounts(tuple(values))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file (default: ./shiftbench_config.yaml)")
    common.add_argument("--seed", type=int, help="Seed for training and scenario generation")
    common.add_argument("--out-dir", help="Output directory")
    common.add_argument("--ks-levels", type=_float_list, help="Comma-separated KS levels")
    common.add_argument("--volumes", type=_int_list, help="Comma-separated total volumes")
    common.add_argument("--mode", choices=[m.value for m in PerturbationMode], help="Perturbation mode")
    common.add_argument("--workers", type=int, help="Evaluation worker threads")
    common.add_argument("--turn-counts", help="Turn-count CSV (default: bundled synthetic sample)")
    common.add_argument("--training-label", help="Turn-count hour used for training")

    parser = argparse.ArgumentParser(
        prog="shiftbench",
        description="Distribution-shift workbench for a learned traffic signal controller",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="Write scenario JSON files for a KS x volume grid")

    train_p = sub.add_parser("train", parents=[common], help="Train the DQN on the training hour")
    train_p.add_argument("--steps", type=int, help="Total environment steps")
    train_p.add_argument("--checkpoint", help="Checkpoint path (default: <out-dir>/checkpoint.json)")

    eval_p = sub.add_parser("evaluate", parents=[common], help="Evaluate a policy on scenarios")
    eval_p.add_argument("scenarios", nargs="*", help="Scenario JSON files (default: the training hour)")
    eval_p.add_argument("--policy", choices=POLICY_NAMES, default="dqn")
    eval_p.add_argument("--checkpoint", help="Trained network (trained when missing)")
    eval_p.add_argument("--event-log", help="Write the per-vehicle event log of the first scenario")

    exp_p = sub.add_parser("experiment", parents=[common], help="Run experiment 1, 2 or 3")
    exp_p.add_argument("number", type=int, choices=(1, 2, 3))
    exp_p.add_argument("--policy", choices=POLICY_NAMES, default="dqn")
    exp_p.add_argument("--checkpoint", help="Trained network (trained when missing)")

    sub.add_parser("ks-report", parents=[common], help="KS distance vs cumulative difference table")

    alarm_p = sub.add_parser("alarm", parents=[common], help="Compare an observed hour to the training hour")
    group = alarm_p.add_mutually_exclusive_group(required=True)
    group.add_argument("--observed", help="Turn-count hour label to check")
    group.add_argument("--observed-counts", type=_phase_counts, help="Eight comma-separated phase counts")
    alarm_p.add_argument("--threshold", type=float, help="KS threshold (default from config)")

    return parser


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------

def load_settings(args: argparse.Namespace) -> ShiftbenchConfig:
    """Loaded config with command-line flags applied on top."""
    config = get_config(args.config).model_copy(deep=True)
    exp = config.experiment
    try:
        if args.seed is not None:
            config.agent.seed = args.seed
            exp.seeds = [args.seed]
        if args.workers is not None:
            exp.workers = args.workers
        if args.out_dir is not None:
            exp.out_dir = args.out_dir
        if args.mode is not None:
            exp.mode = args.mode
        if args.turn_counts is not None:
            exp.turn_counts = args.turn_counts
        if args.training_label is not None:
            exp.training_label = args.training_label
        if args.ks_levels is not None:
            exp.fixed_volume_ks_levels = args.ks_levels
            exp.grid_ks_levels = args.ks_levels
            exp.nonlinearity_levels = args.ks_levels
        if args.volumes is not None:
            exp.fixed_distribution_volumes = args.volumes
            exp.grid_volumes = args.volumes
        if getattr(args, "steps", None) is not None:
            config.agent.total_env_steps = args.steps
    except ValueError as e:
        raise ConfigError(f"Invalid command-line override: {e}") from e
    return config


def _spec(config: ShiftbenchConfig, kind: ExperimentKind, args: argparse.Namespace, **overrides) -> ExperimentSpec:
    checkpoint = getattr(args, "checkpoint", None)
    return ExperimentSpec.from_config(
        config,
        kind,
        policy=getattr(args, "policy", None),
        checkpoint=Path(checkpoint) if checkpoint else None,
        **overrides,
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_generate(args, config: ShiftbenchConfig) -> int:
    spec = _spec(config, ExperimentKind.GRID, args)
    data = load_training_data(spec.turn_counts, spec.training_label)
    scenario_dir = spec.out_dir / "scenarios"
    written = 0
    for seed in spec.seeds:
        for scenario in build_experiment_grid(
            data.p_train, spec.ks_levels, spec.volumes, seed=seed, mode=spec.mode, duration_s=spec.duration_s
        ):
            save_scenario(scenario, scenario_dir / f"{scenario.label}_seed{seed}.json")
            written += 1
    print(f"Wrote {written} scenarios to {scenario_dir}")
    return EXIT_OK


def cmd_train(args, config: ShiftbenchConfig) -> int:
    spec = _spec(config, ExperimentKind.REAL_SCENARIOS, args, policy="dqn")
    if spec.checkpoint is not None and spec.checkpoint.exists():
        raise ConfigError(f"Checkpoint {spec.checkpoint} already exists; choose another path")
    data = load_training_data(spec.turn_counts, spec.training_label)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    obtain_network(spec, data)
    print(f"Checkpoint written under {spec.checkpoint or spec.out_dir}")
    return EXIT_OK


def cmd_evaluate(args, config: ShiftbenchConfig) -> int:
    spec = _spec(config, ExperimentKind.REAL_SCENARIOS, args)
    data = load_training_data(spec.turn_counts, spec.training_label)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    if args.scenarios:
        scenarios = [load_scenario(path) for path in args.scenarios]
    else:
        scenarios = [generate_scenario(
            data.train_counts, duration_s=spec.duration_s, seed=spec.seeds[0], label=data.train_label,
        )]

    network = obtain_network(spec, data) if spec.policy == "dqn" else None
    factory = make_policy_factory(spec.policy, network, spec.simulator.elapsed_clip_s)
    rows = []
    for index, scenario in enumerate(scenarios):
        seed = scenario.seed
        report = evaluate_scenario(
            scenario, factory(), spec.simulator, seed,
            event_log_path=args.event_log if index == 0 and args.event_log else None,
        )
        rows.append(ResultRow(
            scenario_label=scenario.label,
            ks_distance=phase_ks_distance(data.p_train, scenario.distribution()),
            total_volume=scenario.total,
            seed=seed,
            report=report,
            target_ks=scenario.target_ks,
        ))
        print(
            f"{scenario.label}: throughput={report.normalized_throughput:.4f} "
            f"ETT={report.mean_extended_travel_time_s:.1f}s TT={report.mean_travel_time_s:.1f}s "
            f"delay={report.mean_delay_s:.1f}s timed_out={report.timed_out}"
        )
    path = write_results_csv(rows, spec.out_dir / f"evaluate_{spec.policy}.csv")
    print(f"Results written to {path}")
    return EXIT_OK


def cmd_experiment(args, config: ShiftbenchConfig) -> int:
    out_root = Path(config.experiment.out_dir) / f"experiment{args.number}"
    if args.number == 1:
        specs = [_spec(config, ExperimentKind.REAL_SCENARIOS, args, out_dir=out_root)]
    elif args.number == 2:
        specs = [
            _spec(config, ExperimentKind.FIXED_VOLUME_SWEEP, args, out_dir=out_root / "fixed_volume"),
            _spec(config, ExperimentKind.FIXED_DISTRIBUTION_SWEEP, args, out_dir=out_root / "fixed_distribution"),
        ]
    else:
        specs = [_spec(config, ExperimentKind.GRID, args, out_dir=out_root)]

    first = specs[0]
    data = load_training_data(first.turn_counts, first.training_label)
    network = None
    if first.policy == "dqn":
        out_root.mkdir(parents=True, exist_ok=True)
        # one agent for every half of the experiment, kept at the experiment root
        network = obtain_network(first.model_copy(update={"out_dir": out_root}), data)
    factory = make_policy_factory(first.policy, network, first.simulator.elapsed_clip_s)

    for spec in specs:
        outcome = run_experiment(spec, policy_factory=factory, data=data)
        print(f"{spec.kind.value}: {len(outcome.rows)} rows -> {outcome.results_path}")
        if outcome.trends_path:
            print(f"  trends -> {outcome.trends_path}")
    return EXIT_OK


def cmd_ks_report(args, config: ShiftbenchConfig) -> int:
    exp = config.experiment
    spec = _spec(config, ExperimentKind.REAL_SCENARIOS, args)
    data: TrainingData = load_training_data(spec.turn_counts, spec.training_label)
    rows = ks_nonlinearity_report(data.p_train, exp.nonlinearity_levels, mode=spec.mode, seed=spec.seeds[0])
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_nonlinearity_csv(rows, spec.out_dir / "ks_nonlinearity.csv")
    nonlinearity_plot(rows, spec.out_dir / "ks_nonlinearity.svg")
    for row in rows:
        print(f"KS={row.ks_distance:.3f}  cumulative={row.cumulative_difference:.4f}")
    print(f"Table written to {csv_path}")
    return EXIT_OK


def cmd_alarm(args, config: ShiftbenchConfig) -> int:
    spec = _spec(config, ExperimentKind.REAL_SCENARIOS, args)
    data = load_training_data(spec.turn_counts, spec.training_label)
    if args.observed_counts is not None:
        observed = args.observed_counts
    else:
        hours = dict(data.hours)
        if args.observed not in hours:
            raise ConfigError(f"Hour '{args.observed}' not in {spec.turn_counts}; available: {sorted(hours)}")
        observed = hours[args.observed]
    threshold = args.threshold if args.threshold is not None else config.experiment.alarm_threshold
    try:
        result = shift_alarm(data.p_train, normalize(observed), threshold)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    print(f"{result.status}: KS distance {result.distance:.4f} vs threshold {result.threshold:.4f}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "ks-report": cmd_ks_report,
    "alarm": cmd_alarm,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_settings(args)
        setup_logging(config)
        return COMMANDS[args.command](args, config)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ShiftbenchError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return EXIT_RUNTIME
    except Exception as e:
        logger.error(f"{args.command} failed unexpectedly: {e}", exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
