"""Logistic score model: training, scoring, and the score gradient."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

_CLIP = np.finfo(float).eps  # keeps scores strictly inside (0, 1)


class DegenerateLabelsError(ValueError):
    """Training data contains a single class."""


@dataclass
class LogisticModel:
    """Weights over the design row [encoded sensitive, features, intercept]."""

    theta: np.ndarray
    names: list = field(default_factory=list)
    converged: bool = True

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if not np.isfinite(self.theta).all():
            raise ValueError("model weights must be finite")

    def save(self, path):
        payload = {
            "coefficients": {n: float(t) for n, t in zip(self.names, self.theta)}
            if self.names else {str(i): float(t) for i, t in enumerate(self.theta)},
            "converged": bool(self.converged),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            payload = json.load(fh)
        names = list(payload["coefficients"])
        theta = np.array([payload["coefficients"][n] for n in names])
        return cls(theta, names, payload.get("converged", True))


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, _CLIP, 1.0 - _CLIP)


def score_batch(model, Z):
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != model.theta.shape[0]:
        raise ValueError(f"input width {Z.shape[1]} != model dim {model.theta.shape[0]}")
    return sigmoid(Z @ model.theta)


def score(model, a, x):
    """Score for one individual; a is the encoded sensitive vector."""
    u = np.concatenate([np.ravel(a).astype(float), np.ravel(x).astype(float)])
    if u.shape[0] == model.theta.shape[0] - 1:
        u = np.append(u, 1.0)  # intercept input
    return float(score_batch(model, u)[0])


def grad_score_batch(model, Z):
    """Rows (a, x)^T s(1-s); the model-parameter gradient of each score."""
    s = score_batch(model, Z)
    return np.atleast_2d(Z) * (s * (1.0 - s))[:, None]


def grad_score(model, a, x):
    u = np.concatenate([np.ravel(a).astype(float), np.ravel(x).astype(float)])
    if u.shape[0] == model.theta.shape[0] - 1:
        u = np.append(u, 1.0)
    return grad_score_batch(model, u)[0]


def _nll(theta, Z, y, l2, penalize):
    margins = (2.0 * y - 1.0) * (Z @ theta)
    nll = np.logaddexp(0.0, -margins).sum()
    w = theta * penalize
    return nll + 0.5 * l2 * (w @ w)


def _nll_grad(theta, Z, y, l2, penalize):
    p = sigmoid(Z @ theta)
    return Z.T @ (p - y) + l2 * theta * penalize


def train_lr(d, l2_strength=1.0, max_iters=500, tol=1e-8,
             include_sensitive=True):
    """Fit L2-regularized logistic regression on a Dataset.

    The intercept is unpenalized. Deterministic (starts from zero weights).
    Non-convergence sets model.converged = False rather than failing.
    """
    if d.n == 0:
        raise ValueError("dataset is empty")
    if len(np.unique(d.y)) < 2:
        raise DegenerateLabelsError("training data contains a single class")
    Z = d.design_matrix(include_sensitive=include_sensitive)
    names = d.design_names(include_sensitive=include_sensitive)
    y = d.y.astype(float)
    penalize = np.ones(Z.shape[1])
    penalize[-1] = 0.0  # intercept
    res = minimize(
        _nll, np.zeros(Z.shape[1]), args=(Z, y, l2_strength, penalize),
        jac=_nll_grad, method="L-BFGS-B",
        options={"maxiter": max_iters, "gtol": tol, "ftol": 0.0},
    )
    converged = bool(np.linalg.norm(res.jac, ord=np.inf) <= max(tol, 1e-6)) or res.success
    return LogisticModel(res.x, names, converged=converged)
