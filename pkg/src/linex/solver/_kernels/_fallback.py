"""Pure-numpy kernels; same contracts as the compiled extension.

The compiled backend is preferred at import time; this module keeps the
package fully functional without a C toolchain and serves as the reference
the benchmark compares against.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"

# relative slack above which an accepted step counts as an objective increase
_INCREASE_SLACK = 1e-12
_MAX_BAD_STEPS = 10


def project_l1_ball(v: np.ndarray, t: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball of radius t (sort-and-threshold)."""
    v = np.asarray(v, dtype=np.float64)
    a = np.abs(v)
    if a.sum() <= t:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.shape[0] + 1)
    rho = np.nonzero(u * j > css - t)[0][-1]
    theta = (css[rho] - t) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def exact_box_l1_project(v: np.ndarray, shift: np.ndarray, gamma: float,
                         t: float) -> np.ndarray:
    """Exact projection onto {|w|_inf <= gamma} ∩ {|shift + w|_1 <= t}.

    In u = shift + w coordinates this is an l1 ball intersected with a box;
    the KKT point is clip(soft(z, lam), box) for the lam at which the l1
    norm hits t, found by bisection (the norm is nonincreasing in lam).
    """
    v = np.asarray(v, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    z = v + shift
    lo, hi = shift - gamma, shift + gamma

    def u_of(lam: float) -> np.ndarray:
        return np.clip(np.sign(z) * np.maximum(np.abs(z) - lam, 0.0), lo, hi)

    u0 = u_of(0.0)
    if np.abs(u0).sum() <= t:
        return u0 - shift
    lam_lo, lam_hi = 0.0, float(np.max(np.abs(z))) + 1.0
    for _ in range(80):
        lam = 0.5 * (lam_lo + lam_hi)
        if np.abs(u_of(lam)).sum() > t:
            lam_lo = lam
        else:
            lam_hi = lam
    return u_of(lam_hi) - shift


def dykstra_project(v: np.ndarray, shift: np.ndarray, gamma: float, t: float,
                    max_sweeps: int = 50, tol: float = 1e-9) -> np.ndarray:
    """Project v onto {|w|_inf <= gamma} ∩ {|shift + w|_1 <= t}.

    Alternating projections with Dykstra's correction terms. The iterate x
    can stall for many sweeps while the correction terms keep evolving, so
    the sound stop is stationarity of the whole (x, p, q) triple: at a fixed
    point x lies in both sets and v - x = p + q sits in the intersection's
    normal cone, which certifies the projection. If the sweep budget runs
    out first, the exact projection takes over.
    """
    v = np.asarray(v, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    if np.max(np.abs(v), initial=0.0) <= gamma and np.abs(shift + v).sum() <= t:
        return v.copy()
    x = v.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_sweeps):
        y = np.clip(x + p, -gamma, gamma)
        p_new = x + p - y
        z = project_l1_ball(y + q + shift, t) - shift
        q_new = y + q - z
        move = max(
            np.max(np.abs(z - x)),
            np.max(np.abs(p_new - p)),
            np.max(np.abs(q_new - q)),
        )
        x, p, q = z, p_new, q_new
        if move <= tol:
            return x
    return exact_box_l1_project(v, shift, gamma, t)


def lasso_cd_path(Xc: np.ndarray, yc: np.ndarray, w: np.ndarray, alphas: np.ndarray,
                  max_sweeps: int, tol: float) -> np.ndarray:
    """Coordinate-descent lasso along a penalty path, warm-started.

    Inputs are weighted-centered features/targets and normalized weights;
    the objective per point is (1/2S) sum w (yc - Xc b)^2 + alpha |b|_1.
    """
    n, d = Xc.shape
    S = w.sum()
    z = (w @ Xc**2) / S
    wX = w[:, None] * Xc
    coefs = np.zeros((alphas.shape[0], d))
    beta = np.zeros(d)
    r = yc.copy()
    for a_i, alpha in enumerate(alphas):
        for _ in range(max_sweeps):
            delta = 0.0
            for j in range(d):
                if z[j] == 0.0:
                    continue
                old = beta[j]
                rho = float(wX[:, j] @ r) / S + z[j] * old
                if rho > alpha:
                    new = (rho - alpha) / z[j]
                elif rho < -alpha:
                    new = (rho + alpha) / z[j]
                else:
                    new = 0.0
                if new != old:
                    r += Xc[:, j] * (old - new)
                    beta[j] = new
                    delta = max(delta, abs(new - old))
            if delta <= tol:
                break
        coefs[a_i] = beta
    return coefs


def _objective(G: np.ndarray, c: np.ndarray, u: np.ndarray) -> float:
    return float(u @ G @ u - 2.0 * (c @ u))


def best_response(G: np.ndarray, c: np.ndarray, s: np.ndarray, w0: np.ndarray,
                  gamma: float, t: float, step: float, max_iters: int,
                  tol: float) -> tuple[np.ndarray, int, bool]:
    """Projected gradient descent for one player's constrained least squares.

    Minimizes (s+w)'G(s+w) - 2c'(s+w) over the box {|w|_inf <= gamma}
    intersected with the shifted l1 ball {|s+w|_1 <= t}, starting from the
    better of the projected warm start and the projected origin. Returns
    (w, iterations, diverged); diverged means the objective rose on
    _MAX_BAD_STEPS consecutive accepted steps.
    """
    G = np.asarray(G, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    w = exact_box_l1_project(np.asarray(w0, dtype=np.float64), s, gamma, t)
    w_zero = exact_box_l1_project(np.zeros_like(w), s, gamma, t)
    if _objective(G, c, s + w_zero) < _objective(G, c, s + w):
        w = w_zero
    q_prev = _objective(G, c, s + w)
    bad = 0
    iters = 0
    for iters in range(1, max_iters + 1):
        grad = 2.0 * (G @ (s + w) - c)
        w_new = exact_box_l1_project(w - step * grad, s, gamma, t)
        move = np.max(np.abs(w_new - w))
        q_new = _objective(G, c, s + w_new)
        if q_new > q_prev + _INCREASE_SLACK * (1.0 + abs(q_prev)):
            bad += 1
        else:
            bad = 0
        w = w_new
        q_prev = q_new
        if bad >= _MAX_BAD_STEPS:
            return w, iters, True
        if move <= tol:
            break
    return w, iters, False


def run_game(G: np.ndarray, c: np.ndarray, steps: np.ndarray, gamma: float, t: float,
             eps: float, max_rounds: int, inner_iters: int, inner_tol: float):
    """Sequential round-robin best responses until the largest per-round
    player movement (l2) drops below eps.

    Returns (W, rounds_used, converged, deltas, diverged_env); diverged_env
    is -1 unless some player's inner solve diverged.
    """
    k, d = c.shape
    W = np.zeros((k, d))
    deltas = []
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        delta = 0.0
        for i in range(k):
            s = W.sum(axis=0) - W[i]
            w_new, _, diverged = best_response(
                G[i], c[i], s, W[i], gamma, t, float(steps[i]), inner_iters, inner_tol,
            )
            if diverged:
                return W, rounds, False, np.asarray(deltas), i
            delta = max(delta, float(np.linalg.norm(w_new - W[i])))
            W[i] = w_new
        deltas.append(delta)
        if delta < eps:
            converged = True
            break
    return W, rounds, converged, np.asarray(deltas), -1
