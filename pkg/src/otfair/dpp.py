"""Quantile post-processing baseline: map each group's scores onto the
target distribution via empirical CDF / quantile composition."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import EmpiricalDistribution


@dataclass
class QuantileMap:
    """Per-group sorted source samples plus the shared target quantiles.

    Conventions: source CDF is right-continuous rank/n; target quantile is
    the left-continuous generalized inverse, so outputs stay inside
    [min target, max target] and the map is non-decreasing.
    """

    group_samples: dict  # GroupKey -> sorted np.ndarray
    target: EmpiricalDistribution


def fit_dpp(group_scores, target):
    """Store sorted per-group score samples and the target distribution."""
    samples = {}
    for key, vals in group_scores.items():
        arr = np.sort(np.asarray(vals, dtype=float).ravel())
        if arr.size == 0:
            raise ValueError(f"group {key} has no score samples")
        samples[key] = arr
    if not samples:
        raise ValueError("no groups provided")
    return QuantileMap(samples, target)


def dpp_transform(m, key, s):
    """Q_target(F_group(s)); scalar in, scalar out (arrays broadcast)."""
    if key not in m.group_samples:
        raise KeyError(f"unknown group {key}")
    src = m.group_samples[key]
    s = np.asarray(s, dtype=float)
    u = np.searchsorted(src, s, side="right") / src.size
    # Left-continuous target quantile; u = 0 maps to the minimum target sample.
    out = m.target.quantile(np.maximum(u, 1.0 / m.target.n))
    return float(out) if out.ndim == 0 else out
