# src/parity_teleport/cli.py
"""
Batch runner.

    parity-teleport run --config run.json --out report.json
    parity-teleport run --bench analyzer.bench --out report.json --trials 4000 --seed 7
    parity-teleport sweep --config sweep.json --out sweep.csv

Exit codes: 0 success, 2 unreadable or invalid input, 3 protocol-integrity
failure.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from parity_teleport.apparatus import BenchLayout, build_bell_analyzer, derive_detector_map
from parity_teleport.bench_dsl import lower, parse
from parity_teleport.config import Defaults, log_level
from parity_teleport.errors import (
    ConfigError,
    ConventionInconsistencyError,
    ParityTeleportError,
    ProtocolIntegrityError,
)
from parity_teleport.models import FidelityStats, RunConfig, SimReport, SweepSpec
from parity_teleport.protocol import (
    UNCORRECTED_LABELS,
    derive_correction_table,
    haar_qubit,
    input_rng,
    l0_negative_control,
    run_trials,
    teleport_exhaustive,
    teleport_via_swap,
)
from parity_teleport.scoring import max_probability_deviation, summarize, summarize_trials
from parity_teleport.spdc import make_profile, profile_from_spec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTEGRITY = 3

SWEEP_COLUMNS = [
    "value",
    "min_parity_fidelity",
    "mean_parity_fidelity",
    "mean_full_oam_fidelity",
    "max_probability_deviation",
]


def _inputs(config: RunConfig) -> list[tuple[complex, complex]]:
    if config.haar_random is not None:
        rng = input_rng(config.seed)
        return [haar_qubit(rng) for _ in range(config.haar_random)]
    return [(complex(*config.alpha), complex(*config.beta))]


def _negative_control_report(config: RunConfig) -> SimReport:
    profile = profile_from_spec(config.profile, config.l, config.K)
    n_inputs = config.haar_random or Defaults.CONTROL_INPUTS
    if config.alpha is not None:
        logger.warning(f"l={config.l} control averages over {n_inputs} Haar inputs; alpha and beta are ignored")
    stats = l0_negative_control(config.K, n_inputs, input_rng(config.seed or 0), profile)
    table = derive_correction_table(make_profile("uniform", l=1, K=config.K))
    logger.warning(f"l={config.l} run is a negative control; the protocol is not expected to teleport")
    return SimReport(
        version=Defaults.REPORT_VERSION,
        seed=config.seed,
        config=config,
        negative_control=True,
        detector_map={},
        correction_table=table.entries,
        outcome_states={},
        exact_probabilities={},
        exact=[],
        parity_fidelity=FidelityStats(min=stats.min_fidelity, mean=stats.mean_fidelity, max=stats.max_fidelity),
        full_oam_fidelity=summarize([]),
        control=stats,
    )


def build_report(config: RunConfig, layout: BenchLayout | None = None) -> SimReport:
    """Exhaustive run for every input, plus Monte Carlo trials when config.trials > 0."""
    if config.l != 1:
        return _negative_control_report(config)

    profile = profile_from_spec(config.profile, config.l, config.K)
    layout = layout or build_bell_analyzer(profile.window)
    try:
        detector_map = derive_detector_map(layout)
    except ConventionInconsistencyError:
        if config.mode == "apparatus":
            raise
        logger.warning("bench does not resolve the four Bell states; detector map left empty")
        detector_map = {}
    table = derive_correction_table(profile)
    inputs = _inputs(config)

    exact = [teleport_exhaustive(profile, alpha, beta, table) for alpha, beta in inputs]
    branches = [o for report in exact for o in report.outcomes]
    report = SimReport(
        version=Defaults.REPORT_VERSION,
        seed=config.seed,
        config=config,
        negative_control=False,
        detector_map=detector_map,
        correction_table=table.entries,
        outcome_states={o: UNCORRECTED_LABELS[names] for o, names in table.entries.items()},
        exact_probabilities={o.outcome: o.probability for o in exact[0].outcomes},
        exact=exact,
        parity_fidelity=summarize([o.parity_fidelity_after for o in branches]),
        full_oam_fidelity=summarize([o.full_oam_fidelity_after for o in branches]),
        swap=teleport_via_swap(profile, *inputs[0]),
    )
    if config.trials > 0:
        records = run_trials(profile, inputs, config.trials, config.seed, config.mode, table, layout)
        report.monte_carlo = summarize_trials(records, config.seed, config.mode)
        if config.record_trials:
            report.trials = records
    return report


def write_report(report: SimReport, out: Path):
    out.write_text(report.model_dump_json(indent=2) + "\n")
    logger.info(f"report written to {out}")


def _load_config(path: Path) -> RunConfig:
    return RunConfig.model_validate_json(path.read_text(encoding="utf-8"))


def _override(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates = {k: getattr(args, k) for k in ("trials", "seed", "mode") if getattr(args, k, None) is not None}
    if not updates:
        return config
    return RunConfig.model_validate({**config.model_dump(), **updates})


def cmd_run(args: argparse.Namespace) -> int:
    layout = None
    if args.bench:
        lowered = lower(parse(Path(args.bench).read_bytes()))
        config = lowered.run_config()
        layout = lowered.layout
    else:
        config = _load_config(Path(args.config))
    config = _override(config, args)
    write_report(build_report(config, layout), Path(args.out))
    return EXIT_OK


def _sweep_config(config: RunConfig, sweep: SweepSpec, value: float) -> RunConfig:
    data = config.model_dump()
    data["sweep"] = None
    if sweep.parameter == "K":
        if value != int(value) or value < 1:
            raise ConfigError(f"K sweep values must be positive integers, got {value}")
        data["K"] = int(value)
    else:
        if config.profile.kind != "gaussian":
            raise ConfigError("width sweeps need a gaussian profile")
        data["profile"] = {**data["profile"], "width": value}
    return RunConfig.model_validate(data)


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(Path(args.config))
    if config.sweep is None:
        raise ConfigError("config has no sweep section")
    rows = []
    for value in config.sweep.values:
        report = build_report(_sweep_config(config, config.sweep, value))
        if report.negative_control:
            deviation = 0.0
        else:
            deviation = max_probability_deviation(report.exact_probabilities)
        rows.append(
            {
                "value": value,
                "min_parity_fidelity": report.parity_fidelity.min,
                "mean_parity_fidelity": report.parity_fidelity.mean,
                "mean_full_oam_fidelity": report.full_oam_fidelity.mean,
                "max_probability_deviation": deviation,
            }
        )
        logger.info(f"sweep {config.sweep.parameter}={value}: min parity fidelity {report.parity_fidelity.min:.12f}")
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.info(f"sweep written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parity-teleport", description=__doc__.split("\n\n")[0].strip())
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="Run one configuration or bench file and write a JSON report.")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="RunConfig JSON file.")
    source.add_argument("--bench", help=".bench program.")
    run.add_argument("--out", required=True, help="Report path.")
    run.add_argument("--trials", type=int, default=None, help="Override the number of Monte Carlo trials.")
    run.add_argument("--seed", type=int, default=None, help="Override the master seed.")
    run.add_argument("--mode", choices=["projector", "apparatus"], default=None)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", parents=[common], help="Sweep K or the gaussian width and write a CSV.")
    sweep.add_argument("--config", required=True, help="RunConfig JSON file with a sweep section.")
    sweep.add_argument("--out", required=True, help="CSV path.")
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else log_level())
    try:
        return args.func(args)
    except ProtocolIntegrityError as e:
        logger.error(f"protocol integrity failure: {e}")
        return EXIT_INTEGRITY
    except (ParityTeleportError, ValidationError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
