"""Discrete-OT baseline: sorted monotone coupling between uniform empirical
batches and the corresponding model parameter update."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cot import DivergenceError, _eval_row, _iter_phases
from .model import LogisticModel, score_batch

DOT_EPS_THETA = 5e-3  # default parameter step when OtConfig.eps_theta is None


@dataclass
class Coupling:
    """Sparse optimal coupling under uniform marginals.

    rows/cols index the score/target batches; mass entries are positive and
    sum to 1, with row sums 1/n_rows and column sums 1/n_cols.
    """

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    n_rows: int
    n_cols: int


def optimal_coupling_1d(xs, ys):
    """Optimal coupling for cost |x - y| by sorted monotone mass splitting.

    Exact for 1-D convex costs; runs in O(n log n). Masses are computed in
    integer units of 1/(n*m) so the marginals are exact. Sort ties break by
    original index (stable sort).
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.size == 0 or ys.size == 0:
        raise ValueError("batches must be non-empty")
    n, m = xs.size, ys.size
    xi = np.argsort(xs, kind="stable")
    yj = np.argsort(ys, kind="stable")
    rows, cols, units = [], [], []
    i = j = 0
    rem_x, rem_y = m, n  # units left on the current x / y atom (out of n*m total)
    while i < n and j < m:
        take = min(rem_x, rem_y)
        rows.append(xi[i])
        cols.append(yj[j])
        units.append(take)
        rem_x -= take
        rem_y -= take
        if rem_x == 0:
            i += 1
            rem_x = m
        if rem_y == 0:
            j += 1
            rem_y = n
    return Coupling(np.array(rows), np.array(cols),
                    np.array(units, dtype=float) / (n * m), n, m)


def coupling_cost(c, xs, ys):
    """Transport cost <T, C> for cost |x - y|; equals the exact empirical W1."""
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    return float(np.sum(c.mass * np.abs(xs[c.rows] - ys[c.cols])))


def dot_theta_update(model, couplings, batches, target_scores, eps_theta):
    """One descent step using only the sparse coupling entries per group."""
    sbar = np.asarray(target_scores, dtype=float).ravel()
    grad = np.zeros_like(model.theta)
    for key, Z in batches.items():
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if Z.shape[1] != model.theta.shape[0]:
            raise ValueError("design width does not match model dimension")
        c = couplings[key]
        s = score_batch(model, Z)
        sign = np.sign(s[c.rows] - sbar[c.cols])  # sign(0) = 0
        w = np.zeros(s.size)
        np.add.at(w, c.rows, c.mass * sign)
        grad += Z.T @ (w * s * (1.0 - s))
    if not np.isfinite(grad).all():
        raise DivergenceError("non-finite parameter gradient; reduce eps_theta")
    return LogisticModel(model.theta - eps_theta * grad, model.names,
                         model.converged)


def dot_run(model, data, target, cfg, trace_every=50, eval_data=None,
            include_sensitive=True, rng=None, start_update=0):
    """Alternate coupling re-estimation and parameter updates (cot_run analog).

    Uses cfg batch sizes, seed, eps_theta and num_updates; the regularized
    dual machinery is not involved. Deterministic under cfg.seed.
    """
    if target.n < 1:
        raise ValueError("target distribution is empty")
    eps_theta = DOT_EPS_THETA if cfg.eps_theta is None else cfg.eps_theta
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    trace = []
    k_total = start_update
    for phase_data, duration, phase_eval in _iter_phases(data):
        keys = phase_data.group_keys
        group_Z = {key: phase_data.design_matrix(
                       phase_data.groups[key], include_sensitive=include_sensitive)
                   for key in keys}
        ev = phase_eval if phase_eval is not None else (
            eval_data if eval_data is not None else phase_data)
        if k_total == 0:
            trace.append(_eval_row(0, model, ev, target, include_sensitive, {}))
        steps = duration if duration is not None else cfg.num_updates - k_total
        steps = min(steps, cfg.num_updates - k_total)
        for _ in range(steps):
            k_total += 1
            sbar = target.samples[rng.integers(0, target.n, cfg.batch_target)]
            couplings, batches = {}, {}
            for key in keys:
                Zg = group_Z[key]
                Z = Zg[rng.integers(0, Zg.shape[0], cfg.batch_scores)]
                s = score_batch(model, Z)
                couplings[key] = optimal_coupling_1d(s, sbar)
                batches[key] = Z
            model = dot_theta_update(model, couplings, batches, sbar,
                                     eps_theta)
            if np.abs(model.theta).max() > 1e12:
                raise DivergenceError(
                    f"model parameters diverged at update {k_total}; "
                    "reduce eps_theta")
            if k_total % trace_every == 0:
                trace.append(_eval_row(k_total, model, ev, target,
                                       include_sensitive, {}))
        if k_total >= cfg.num_updates:
            break
    return model, trace
