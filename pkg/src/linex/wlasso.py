"""Weighted lasso by coordinate descent, plus path-based support selection.

Objective convention (S = sum of sample weights):

    (1/(2S)) * sum_j w_j (y_j - beta.x_j)^2 + alpha * |beta|_1

fitted on weighted-centered data, so the intercept is implicit. The same
normalization is used for the ridge solves so penalties are comparable.
"""
from __future__ import annotations

import numpy as np


class ZeroWeightError(ValueError):
    """Every sample weight is zero; the weighted fit is undefined."""


def _center(X, y, w):
    # rescaling weights never changes the fit; normalizing by the max guards
    # the tiny-kernel-width regime where raw weights underflow
    w = np.asarray(w, dtype=np.float64)
    peak = w.max() if w.size else 0.0
    if peak <= 0.0:
        raise ZeroWeightError
    w = w / peak
    S = w.sum()
    xbar = (w @ X) / S
    ybar = float(w @ y) / S
    return X - xbar, y - ybar, xbar, ybar, S, w


def weighted_lasso_path(X, y, sample_weight, n_alphas: int = 60, eps: float = 1e-3,
                        max_sweeps: int = 1000, tol: float = 1e-8):
    """Geometric penalty path from alpha_max (all-zero fit) downward.

    Returns (alphas, coefs) with coefs of shape (n_alphas, d), warm-started
    along the path. The coordinate-descent sweeps run in the compiled kernel
    when available.
    """
    from .solver import _kernels  # late import: kernels package pulls no deps

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = X.shape[1]
    try:
        Xc, yc, _, _, S, w = _center(X, y, sample_weight)
    except ZeroWeightError:
        return np.zeros(1), np.zeros((1, d))
    alpha_max = float(np.max(np.abs(Xc.T @ (w * yc))) / S) if d else 0.0
    if alpha_max <= 0.0:
        alphas = np.zeros(1)
        return alphas, np.zeros((1, d))
    alphas = np.geomspace(alpha_max, alpha_max * eps, n_alphas)
    coefs = _kernels.lasso_cd_path(Xc, yc, w, alphas, max_sweeps, tol)
    return alphas, coefs


def path_support(coefs: np.ndarray, K: int) -> list[int]:
    """Indices of the K largest-magnitude coefficients at the sparsest path
    point with at least K active features (densest point if none has K)."""
    active = coefs != 0.0
    nnz = active.sum(axis=1)
    rows = np.nonzero(nnz >= K)[0]
    row = coefs[rows[0]] if rows.size else coefs[-1]
    order = np.argsort(-np.abs(row), kind="stable")
    picked = [int(j) for j in order[:K] if row[j] != 0.0]
    return sorted(picked)


def debias_ridge(X, y, sample_weight, support, ridge: float = 1e-8):
    """Weighted ridge restricted to a support; returns (full coef, intercept).

    With all-zero weights there is no usable neighborhood: the coefficients
    are zero and the intercept falls back to the plain mean target.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = X.shape[1]
    try:
        Xc, yc, xbar, ybar, S, w = _center(X, y, sample_weight)
    except ZeroWeightError:
        return np.zeros(d), float(np.mean(y))
    coef = np.zeros(d)
    cols = sorted(int(j) for j in support)
    if cols:
        Xs = Xc[:, cols]
        A = Xs.T @ (w[:, None] * Xs) / S + ridge * np.eye(len(cols))
        b = Xs.T @ (w * yc) / S
        coef[cols] = np.linalg.solve(A, b)
    intercept = ybar - float(coef @ xbar)
    return coef, intercept


def weighted_ridge(X, y, sample_weight, ridge: float):
    """Dense weighted ridge over all features; returns (coef, intercept)."""
    d = np.asarray(X).shape[1]
    return debias_ridge(X, y, sample_weight, range(d), ridge)
