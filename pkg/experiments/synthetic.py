#!/usr/bin/env python3
"""
Synthetic bag-classification sweeps (test accuracy vs n and vs SNR).

Every (sweep value, seed) pair is one job: it generates the balanced
train/test bags once and trains each requested model on them. Jobs run in a
process pool; rows are re-sorted afterwards so the CSV does not depend on
completion order.
"""

import concurrent.futures
import dataclasses
import logging
import time
from typing import Callable, List, Sequence, Tuple

from hvnet.datagen import make_synthetic_dataset
from hvnet.helpers import derive_seed
from hvnet.network import accuracy, train

from experiments.baselines import bag_set, build_model
from experiments.config import ExperimentConfig
from experiments.metrics import MetricRow, aggregate_repeats, sort_rows

logger = logging.getLogger(__name__)

SWEEPS = {
    "synth-n-sweep": "n",
    "synth-snr-sweep": "snr_db",
}


def run_jobs(worker: Callable, jobs: Sequence[Tuple], workers: int) -> List[MetricRow]:
    """Run worker over argument tuples, sequentially or in a process pool."""
    rows: List[MetricRow] = []
    if workers <= 1 or len(jobs) <= 1:
        logger.info(f"📝 Running {len(jobs)} jobs sequentially...")
        for args in jobs:
            rows.extend(worker(args))
        return rows

    logger.info(f"🚀 Running {len(jobs)} jobs on {workers} workers...")
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(worker, args): args[:3] for args in jobs}
        for future in concurrent.futures.as_completed(futures):
            try:
                rows.extend(future.result())
            except Exception as e:
                logger.error(f"❌ Job {futures[future]} failed: {e}")
                raise
            logger.info(f"Finished job {futures[future]}")
    return rows


def fit_and_score(kind, model, train_set, test_set, cfg: ExperimentConfig, seed: int):
    """Train one model; returns (train_acc, test_acc, final_loss, wall_ms)."""
    start = time.perf_counter()
    train_cfg = dataclasses.replace(cfg.train, seed=seed)
    params, history = train(model, train_cfg, train_set)
    wall_ms = (time.perf_counter() - start) * 1000.0 if cfg.record_timing else 0.0
    final = history[-1]
    test_acc = accuracy(model, params, test_set)
    logger.info(f"{kind}: train acc {final.train_acc:.3f}, test acc {test_acc:.3f}")
    return final.train_acc, test_acc, final.loss, wall_ms


def _synth_job(args) -> List[MetricRow]:
    task, sweep_name, value, seed, cfg = args
    task_cfg = dataclasses.replace(cfg.synthetic, **{sweep_name: value})
    train_bags, test_bags = make_synthetic_dataset(task_cfg, derive_seed(seed, task, value))
    rows = []
    for kind in cfg.models:
        model = build_model(kind, cfg.model, task_cfg.n, num_classes=2)
        train_set = bag_set(kind, train_bags, cfg.model)
        test_set = bag_set(kind, test_bags, cfg.model)
        train_acc, test_acc, loss, wall_ms = fit_and_score(
            kind, model, train_set, test_set, cfg, derive_seed(seed, task, value, kind)
        )
        rows.append(MetricRow(task, kind, sweep_name, float(value), seed, train_acc, test_acc, loss, wall_ms))
    return rows


def synth_jobs(cfg: ExperimentConfig, task: str) -> List[Tuple]:
    sweep_name = SWEEPS[task]
    values = cfg.n_grid if sweep_name == "n" else cfg.snr_grid
    # The other variable stays at its task default (n = 24 or 30 dB).
    return [
        (task, sweep_name, int(v) if sweep_name == "n" else float(v), cfg.seed + r, cfg)
        for v in values
        for r in range(cfg.repeats)
    ]


def run_synth_sweep(cfg: ExperimentConfig, task: str) -> List[MetricRow]:
    """
    Rows for every sweep value and model, sorted; averaged over seeds when
    cfg.repeats > 1.
    """
    if task not in SWEEPS:
        raise ValueError(f"unknown synthetic task {task!r}")
    jobs = synth_jobs(cfg, task)
    logger.info(f"{task}: {len(jobs)} sweep points x {len(cfg.models)} models")
    rows = sort_rows(run_jobs(_synth_job, jobs, cfg.workers))
    return aggregate_repeats(rows) if cfg.repeats > 1 else rows
