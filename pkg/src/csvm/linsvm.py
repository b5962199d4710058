"""Bias-free L2-regularised squared-hinge linear SVM.

Minimises

    F(w) = w'w + C * sum_i max(1 - y_i w'x_i, 0)^2

with a deterministic full-batch descent method and an Armijo backtracking
line search. The objective is once continuously differentiable, so the
gradient vanishes at the optimum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateLabels, InvalidArgument, InvalidInput

log = logging.getLogger(__name__)

ARMIJO = 1e-4
BACKTRACK = 0.5
MIN_STEP = 1e-20
METHODS = ("newton", "gd")


@dataclass(frozen=True, eq=False)
class PatchSet:
    """n x d feature matrix with labels in {+1, -1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features)
        y = np.asarray(self.labels)
        if x.ndim != 2:
            raise InvalidInput(f"features must be 2-D, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise InvalidInput(f"{y.shape[0] if y.ndim else 0} labels for {x.shape[0]} rows")
        if not np.isin(y, (-1, 1)).all():
            raise InvalidInput("labels must be +1 or -1")
        if not np.isfinite(x).all():
            raise InvalidInput("features must be finite")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y.astype(np.int8))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        pos = int(np.count_nonzero(self.labels == 1))
        return pos, self.n - pos


@dataclass(frozen=True, eq=False)
class SvmModel:
    weights: np.ndarray
    penalty_c: float
    iterations_run: int = 0
    final_objective: float = 0.0

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


def objective(w, x, y, c) -> float:
    margin = np.maximum(1.0 - y * (x @ w), 0.0)
    return float(w @ w + c * (margin @ margin))


def gradient(w, x, y, c) -> np.ndarray:
    margin = np.maximum(1.0 - y * (x @ w), 0.0)
    return 2.0 * w - 2.0 * c * (x.T @ (y * margin))


def _newton_direction(w, g, x, y, c):
    # Generalised Hessian 2(I + C A'A) over the rows with positive margin.
    active = y * (x @ w) < 1.0
    a = x[active]
    m, d = a.shape
    rhs = -0.5 * g
    if m == 0:
        return rhs
    if m >= d:
        h = a.T @ a
        h *= c
        h[np.diag_indices(d)] += 1.0
        return np.linalg.solve(h, rhs)
    # Woodbury: (I + C A'A)^-1 v = v - C A'(I + C AA')^-1 A v
    k = a @ a.T
    k *= c
    k[np.diag_indices(m)] += 1.0
    return rhs - c * (a.T @ np.linalg.solve(k, a @ rhs))


def train_l2svm(
    data: PatchSet,
    c: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 1000,
    method: str = "newton",
    callback: Optional[Callable[[int, float], None]] = None,
) -> SvmModel:
    """Fit a bias-free squared-hinge SVM starting from w = 0.

    Stops when the relative objective decrease of one iteration drops below
    `tol`, when the gradient norm is below ``tol * (1 + |w|)``, or after
    `max_iter` iterations. `callback(iteration, objective)` is called once
    for the starting point and once per accepted step.

    ``method="newton"`` takes generalised Newton steps; ``method="gd"`` takes
    steepest-descent steps. Both use the same Armijo backtracking.
    """
    if not c > 0:
        raise InvalidArgument(f"penalty C must be positive, got {c}")
    if not tol > 0 or max_iter < 0:
        raise InvalidArgument(f"bad solver settings tol={tol} max_iter={max_iter}")
    if method not in METHODS:
        raise InvalidArgument(f"method must be one of {METHODS}, got {method!r}")
    if data.dim == 0:
        raise InvalidInput("cannot train on zero-dimensional features")
    pos, neg = data.class_counts()
    if pos == 0 or neg == 0:
        raise DegenerateLabels(f"training data has {pos} positive and {neg} negative rows")

    x = np.ascontiguousarray(data.features, dtype=np.float64)
    y = data.labels.astype(np.float64)
    w = np.zeros(data.dim)
    f = objective(w, x, y, c)
    if callback is not None:
        callback(0, f)
    step = 1.0
    it = 0
    while it < max_iter:
        g = gradient(w, x, y, c)
        if np.linalg.norm(g) <= tol * (1.0 + np.linalg.norm(w)):
            break
        if method == "newton":
            direction = _newton_direction(w, g, x, y, c)
            step = 1.0
        else:
            direction = -g
            step = min(1.0, 2.0 * step)
        slope = float(g @ direction)
        if slope >= 0:
            break
        while step > MIN_STEP:
            w_new = w + step * direction
            f_new = objective(w_new, x, y, c)
            if f_new <= f + ARMIJO * step * slope:
                break
            step *= BACKTRACK
        else:
            log.debug("line search stalled at iteration %d", it)
            break
        it += 1
        decrease = f - f_new
        w, f_old, f = w_new, f, f_new
        if callback is not None:
            callback(it, f)
        if decrease <= tol * max(f_old, np.finfo(float).tiny):
            break
    return SvmModel(weights=w, penalty_c=float(c), iterations_run=it, final_objective=f)


def _check_dim(model: SvmModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (model.dim,):
        raise InvalidInput(f"expected {model.dim} features, got shape {x.shape}")
    return x


def decision(model: SvmModel, x) -> float:
    """Score w'x accumulated in float64. Accepts a vector or a row matrix."""
    x = _check_dim(model, x)
    score = x @ model.weights.astype(np.float64)
    return float(score) if np.ndim(score) == 0 else score


def predict(model: SvmModel, x):
    """+1 where the score is strictly positive, else -1 (a zero score maps to -1)."""
    score = decision(model, x)
    return np.where(score > 0, 1, -1) if np.ndim(score) else (1 if score > 0 else -1)
