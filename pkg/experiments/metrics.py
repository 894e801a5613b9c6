"""
Metric rows and their CSV form.
"""

import csv
import logging
from dataclasses import dataclass, replace
from itertools import groupby
from typing import List, Optional, Sequence

import numpy as np

from hvnet.errors import DatasetError, ParseError

logger = logging.getLogger(__name__)

HEADER = ["task", "model", "sweep_name", "sweep_value", "seed", "train_acc", "test_acc", "final_loss", "wall_ms"]
STD_COLUMN = "test_acc_std"


@dataclass(frozen=True)
class MetricRow:
    task: str
    model: str
    sweep_name: str
    sweep_value: float
    seed: int
    train_acc: float
    test_acc: float
    final_loss: float
    wall_ms: float = 0.0
    test_acc_std: Optional[float] = None

    def __post_init__(self):
        for name in ("train_acc", "test_acc"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def sort_key(self):
        return (self.task, self.sweep_value, self.model, self.seed)


def sort_rows(rows: Sequence[MetricRow]) -> List[MetricRow]:
    return sorted(rows, key=MetricRow.sort_key)


def aggregate_repeats(rows: Sequence[MetricRow]) -> List[MetricRow]:
    """
    Average rows that differ only in seed; the result keeps the smallest seed
    and records the population std-dev of test accuracy.
    """

    def point(r: MetricRow):
        return (r.task, r.sweep_value, r.model)

    out = []
    for _, group in groupby(sorted(rows, key=MetricRow.sort_key), key=point):
        group = list(group)
        test = np.array([r.test_acc for r in group])
        out.append(
            replace(
                group[0],
                train_acc=float(np.mean([r.train_acc for r in group])),
                test_acc=float(test.mean()),
                final_loss=float(np.mean([r.final_loss for r in group])),
                wall_ms=float(np.mean([r.wall_ms for r in group])),
                test_acc_std=float(test.std()),
            )
        )
    return out


def _format_value(value: float) -> str:
    return f"{value:g}"


def write_metrics_csv(rows: Sequence[MetricRow], path: str, with_std: bool = False) -> None:
    """Write rows (already sorted) with fixed float formatting."""
    header = HEADER + ([STD_COLUMN] if with_std else [])
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            line = [
                r.task,
                r.model,
                r.sweep_name,
                _format_value(r.sweep_value),
                str(r.seed),
                f"{r.train_acc:.6f}",
                f"{r.test_acc:.6f}",
                f"{r.final_loss:.6f}",
                f"{r.wall_ms:.1f}",
            ]
            if with_std:
                line.append(f"{(r.test_acc_std or 0.0):.6f}")
            writer.writerow(line)
    logger.info(f"Wrote {len(rows)} metric rows to {path}")


def read_metrics_csv(path: str) -> List[MetricRow]:
    """
    Raises:
        ParseError: Header or a row does not match the metrics schema.
        DatasetError: The file has no rows.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or reader.fieldnames[: len(HEADER)] != HEADER:
            raise ParseError(f"unexpected header {reader.fieldnames}", path=path, line=1)
        for row in reader:
            try:
                std = row.get(STD_COLUMN)
                rows.append(
                    MetricRow(
                        task=row["task"],
                        model=row["model"],
                        sweep_name=row["sweep_name"],
                        sweep_value=float(row["sweep_value"]),
                        seed=int(row["seed"]),
                        train_acc=float(row["train_acc"]),
                        test_acc=float(row["test_acc"]),
                        final_loss=float(row["final_loss"]),
                        wall_ms=float(row["wall_ms"]),
                        test_acc_std=float(std) if std else None,
                    )
                )
            except (TypeError, ValueError) as e:
                raise ParseError(str(e), path=path, line=reader.line_num) from e
    if not rows:
        logger.error(f"Metrics file {path} has no rows")
        raise DatasetError(f"metrics file {path} has no rows")
    return rows
