"""Aggregate statistics over repeated simulation runs."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as _scipy_stats


def confidence_interval(samples, confidence: float = 0.95):
    """Mean and two-sided Student-t half-width of `samples`.

    With fewer than two samples the half-width is not applicable and is
    returned as nan.
    """
    xs = np.asarray(list(samples), dtype=float)
    if xs.size == 0:
        raise ValueError("confidence_interval needs at least one sample")
    mean = float(xs.mean())
    if xs.size < 2:
        return mean, float("nan")
    s = float(xs.std(ddof=1))
    tq = float(_scipy_stats.t.ppf(0.5 + confidence / 2.0, df=xs.size - 1))
    return mean, tq * s / math.sqrt(xs.size)
