"""Aggregation of per-kernel displacements and error statistics vs. ground truth.

The kernel cloud is treated as one measurement: the motion estimate is the
arithmetic mean of the per-kernel displacements, and the per-axis average
error is the absolute bias |mean - applied|. The per-kernel mean absolute
error is also computed and logged for comparison, but the bias definition is
primary. Standard deviations are population (divide by n).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "case",
    "n_kernels",
    "applied_x",
    "applied_y",
    "avg_error_x",
    "avg_error_y",
    "relative_error_x",
    "relative_error_y",
    "std_x",
    "std_y",
)


def aggregate(displacements) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis mean and population standard deviation of a displacement field."""
    arr = np.asarray(displacements, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise ValueError(f"displacement field must have shape (n, 2) with n >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("displacement field contains non-finite values")
    return arr.mean(axis=0), arr.std(axis=0)


@dataclass(frozen=True)
class ErrorStats:
    """Error statistics of an estimated motion field against an applied motion.

    ``relative_error`` components are NaN where the applied motion component
    is zero (relative error undefined); CSV serialization writes "n/a".
    """

    n_kernels: int
    applied: tuple[float, float]
    avg_error: tuple[float, float]
    relative_error: tuple[float, float]
    std_dev: tuple[float, float]


def error_stats(displacements, applied) -> ErrorStats:
    """Compare the aggregated motion against the applied (u, v) motion."""
    mean, std = aggregate(displacements)
    applied = (float(applied[0]), float(applied[1]))
    if not all(math.isfinite(a) for a in applied):
        raise ValueError("applied motion must be finite")

    avg_error = tuple(abs(float(m) - a) for m, a in zip(mean, applied))
    relative = tuple(
        (err / abs(a) * 100.0) if a != 0.0 else math.nan
        for err, a in zip(avg_error, applied)
    )

    arr = np.asarray(displacements, dtype=np.float64)
    per_kernel_abs = np.abs(arr - np.asarray(applied)).mean(axis=0)
    log.info(
        "motion errors: bias (%.3e, %.3e) px, per-kernel mean abs (%.3e, %.3e) px",
        avg_error[0], avg_error[1], per_kernel_abs[0], per_kernel_abs[1],
    )

    return ErrorStats(
        n_kernels=arr.shape[0],
        applied=applied,
        avg_error=avg_error,
        relative_error=relative,
        std_dev=(float(std[0]), float(std[1])),
    )


def _fmt(value: float) -> str:
    return "n/a" if math.isnan(value) else f"{value:.6e}"


def stats_csv_row(case_id, stats: ErrorStats) -> list[str]:
    """Serialize one ErrorStats as a CSV row in :data:`REPORT_COLUMNS` order."""
    return [
        str(case_id),
        str(stats.n_kernels),
        _fmt(stats.applied[0]),
        _fmt(stats.applied[1]),
        _fmt(stats.avg_error[0]),
        _fmt(stats.avg_error[1]),
        _fmt(stats.relative_error[0]),
        _fmt(stats.relative_error[1]),
        _fmt(stats.std_dev[0]),
        _fmt(stats.std_dev[1]),
    ]


def summary_rows(all_stats: list[ErrorStats]) -> list[list[str]]:
    """Average / max / min rows over the per-case error and relative-error columns."""
    if not all_stats:
        return []
    avg_x = [s.avg_error[0] for s in all_stats]
    avg_y = [s.avg_error[1] for s in all_stats]
    rel_x = [s.relative_error[0] for s in all_stats]
    rel_y = [s.relative_error[1] for s in all_stats]

    def row(label, fn):
        return [
            label, "-", "-", "-",
            _fmt(fn(avg_x)), _fmt(fn(avg_y)),
            _fmt(fn(rel_x)), _fmt(fn(rel_y)),
            "-", "-",
        ]

    mean = lambda xs: sum(xs) / len(xs)
    return [row("average", mean), row("max", max), row("min", min)]
