#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
CLI for HVNet

Runs the randomized identity checks, the synthetic bag-classification sweeps
(test accuracy vs number of samples and vs SNR), the ECG5000 resolution sweep,
and renders metric CSVs as SVG plots. Each run writes metrics.csv, the
effective config.json and one plot into the output directory.

Exit codes: 0 success, 1 verification failure, 2 I/O or data error,
3 configuration error.
"""

import argparse
import logging
import os
import sys

from experiments.config import ExperimentConfig, apply_overrides, load_config, write_config
from experiments.ecg import run_ecg
from experiments.metrics import write_metrics_csv
from experiments.plot import emit_plot, emit_plots
from experiments.synthetic import run_synth_sweep
from experiments.verify import run_verify
from hvnet.errors import ConfigError, DatasetError, ParseError, ShapeError
from hvnet.helpers import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_IO, EXIT_CONFIG = 0, 1, 2, 3


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    return apply_overrides(
        cfg,
        seed=args.seed,
        out=args.out,
        repeats=getattr(args, "repeats", None),
        workers=getattr(args, "workers", None),
        epochs=getattr(args, "epochs", None),
        record_timing=True if getattr(args, "record_timing", False) else None,
    )


def _write_outputs(cfg: ExperimentConfig, rows, task: str) -> None:
    csv_path = os.path.join(cfg.out, "metrics.csv")
    write_metrics_csv(rows, csv_path, with_std=cfg.repeats > 1)
    write_config(cfg, os.path.join(cfg.out, "config.json"))
    emit_plot(csv_path, os.path.join(cfg.out, f"{task}.svg"), task)


def command_verify(args, cfg: ExperimentConfig) -> int:
    logger.info("Running identity checks...")
    report = run_verify(seed=cfg.seed, instances=args.instances)
    report.write(os.path.join(cfg.out, "verify.json"))
    for line in report.lines():
        print(line)
    if not report.passed:
        logger.error("Verification failed.")
        return EXIT_VERIFY_FAILED
    logger.info("All identity checks passed.")
    return EXIT_OK


def command_synth(args, cfg: ExperimentConfig) -> int:
    rows = run_synth_sweep(cfg, args.command)
    _write_outputs(cfg, rows, args.command)
    return EXIT_OK


def command_ecg(args, cfg: ExperimentConfig) -> int:
    train_path = args.train or cfg.ecg_train
    test_path = args.test or cfg.ecg_test
    rows = run_ecg(cfg, train_path, test_path)
    _write_outputs(cfg, rows, "ecg")
    return EXIT_OK


def command_plot(args, cfg: ExperimentConfig) -> int:
    if args.task:
        emit_plot(args.csv, os.path.join(cfg.out, f"{args.task}.svg"), args.task)
    else:
        emit_plots(args.csv, cfg.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (defaults to built-in settings)")
    common.add_argument("--seed", type=int, help="Base seed for every random stream")
    common.add_argument("--out", help="Output directory (default: results)")
    common.add_argument("--verbose", action="store_true", help="Enable verbose logging (DEBUG level)")
    common.add_argument("--log-file", help="Log file path (default: hvnet.log in the output directory)")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--repeats", type=int, help="Seeds per sweep point; adds a test_acc_std column")
    runs.add_argument("--workers", type=int, help="Parallel worker processes (1 runs sequentially)")
    runs.add_argument("--epochs", type=int, help="Training epochs per model")
    runs.add_argument(
        "--record-timing", action="store_true", help="Record wall-clock training time in wall_ms"
    )

    parser = argparse.ArgumentParser(description="Hilbert coVariance Networks: checks and experiments")
    subparsers = parser.add_subparsers(dest="command", required=True)

    ver = subparsers.add_parser("verify", parents=[common], help="Run the randomized identity checks")
    ver.add_argument("--instances", type=int, default=100, help="Random instances per family")
    ver.set_defaults(func=command_verify)

    for name, what in (("synth-n-sweep", "number of samples"), ("synth-snr-sweep", "SNR")):
        sp = subparsers.add_parser(name, parents=[common, runs], help=f"Synthetic test accuracy vs {what}")
        sp.set_defaults(func=command_synth)

    ecg = subparsers.add_parser("ecg", parents=[common, runs], help="ECG5000 test accuracy vs resolution m")
    ecg.add_argument("--train", help="Path to ECG5000_TRAIN (tab or comma separated)")
    ecg.add_argument("--test", help="Path to ECG5000_TEST (tab or comma separated)")
    ecg.set_defaults(func=command_ecg)

    plot = subparsers.add_parser("plot", parents=[common], help="Render a metrics CSV as SVG")
    plot.add_argument("--csv", required=True, help="metrics.csv to render")
    plot.add_argument("--task", help="Task to plot (default: one file per task)")
    plot.set_defaults(func=command_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as e:
        configure_logging(logging.DEBUG if args.verbose else logging.INFO)
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    try:
        os.makedirs(cfg.out, exist_ok=True)
    except OSError as e:
        configure_logging(logging.DEBUG if args.verbose else logging.INFO)
        logger.error(f"Cannot create output directory {cfg.out}: {e}")
        return EXIT_IO
    log_file = args.log_file or os.path.join(cfg.out, "hvnet.log")
    configure_logging(logging.DEBUG if args.verbose else logging.INFO, log_file=log_file)
    if args.verbose:
        logger.debug("Verbose logging enabled.")

    try:
        return args.func(args, cfg)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (OSError, ParseError, DatasetError, ShapeError) as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
