"""
Fairness and ratio metrics shared by the simulator, the model and the
comparison harness.

Ratios are always uplink over downlink.  A zero denominator is encoded with
float markers (``inf`` for up > 0, ``nan`` for 0/0) which survive the CSV
round trip as the strings ``inf`` / ``nan``.
"""

from __future__ import annotations

import math
from typing import Sequence, Union

import numpy as np

from src.errors import MetricError

ThroughputVector = Union[Sequence[float], np.ndarray]

INFINITE_RATIO = math.inf
UNDEFINED_RATIO = math.nan


def jain_index(values: ThroughputVector) -> float:
    """
    Jain fairness index ``(Σx)² / (n·Σx²)`` of per-flow throughputs.

    Parameters
    ----------
    values : sequence of float
        Nonempty, every entry >= 0, at least one > 0.

    Returns
    -------
    float
        Value in [1/n, 1]; 1 means all flows are equal.

    Example
    -------
    >>> round(jain_index([4, 1]), 6)
    0.735294
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise MetricError("throughput vector must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise MetricError("throughput vector contains non-finite entries")
    if np.any(arr < 0):
        raise MetricError("throughputs must be >= 0")
    # Scaled by the largest entry; the index is scale-free.
    peak = arr.max()
    if peak == 0:
        raise MetricError("all throughputs are zero")
    scaled = arr / peak
    total = scaled.sum()
    index = float(total * total / (arr.size * np.square(scaled).sum()))
    return min(index, 1.0)


def throughput_ratio(up_total: float, down_total: float) -> float:
    """Uplink over downlink throughput, with inf / nan for a zero denominator."""
    if math.isnan(up_total) or math.isnan(down_total):
        raise MetricError("throughputs must be numbers")
    if up_total < 0 or down_total < 0:
        raise MetricError(f"throughputs must be >= 0, got {up_total}, {down_total}")
    if down_total == 0:
        return INFINITE_RATIO if up_total > 0 else UNDEFINED_RATIO
    return up_total / down_total


def is_infinite_marker(value: float | None) -> bool:
    return value is not None and math.isinf(value)


def is_undefined_marker(value: float | None) -> bool:
    return value is not None and math.isnan(value)
