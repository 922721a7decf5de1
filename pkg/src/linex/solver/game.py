"""The constrained best-response game and its closed-form equilibrium rules.

Each environment is a player fitting a weighted least-squares predictor under
a per-player box bound (gamma) and an l1 bound (t) on the summed predictor.
The explanation is the sum of the player predictors at the fixed point.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Attribution, rng_from
from ..errors import DegenerateGammaError, InnerDivergenceError, SingularSystemError
from ..neighborhood import EnvironmentSet, Neighborhood
from ..wlasso import ZeroWeightError, path_support, weighted_lasso_path
from . import _kernels


@dataclass(frozen=True)
class GameConfig:
    """Knobs of the best-response game."""

    k: int
    gamma: float
    t: float
    epsilon: float = 1e-6
    max_rounds: int = 200
    inner_max_iters: int = 500
    inner_tol: float = 1e-8
    ridge: float = 1e-8

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.gamma <= 0 or self.t <= 0 or self.epsilon <= 0:
            raise ValueError("gamma, t, and epsilon must be positive")

    def box_l1_compatible(self, d: int) -> bool:
        """Whether t >= gamma*d, the regime the equilibrium rules assume."""
        return self.t >= self.gamma * d - 1e-12


@dataclass(frozen=True)
class PlayerState:
    """Per-environment predictors and convergence bookkeeping."""

    w_tilde: np.ndarray  # (k, d)
    rounds_used: int
    converged: bool
    max_delta_history: np.ndarray


def _weighted_center(X: np.ndarray, y: np.ndarray, w: np.ndarray):
    # weight rescaling never changes the fit; normalizing by the max guards
    # against underflowed kernel weights
    peak = w.max() if w.size else 0.0
    if peak <= 0.0:
        raise ZeroWeightError
    w = w / peak
    sw = w.sum()
    xbar = (w @ X) / sw
    ybar = float(w @ y) / sw
    return X - xbar, y - ybar, xbar, ybar, w


def weighted_lsq(env: Neighborhood, ridge: float = 1e-8) -> np.ndarray:
    """Slope of the weighted least-squares fit on centered data.

    The intercept is implied by the centering: ybar - slope @ xbar. Raises
    ZeroWeightError when every sample weight is zero.
    """
    Xc, yc, _, _, w = _weighted_center(env.X, env.targets, env.weights)
    d = Xc.shape[1]
    A = Xc.T @ (w[:, None] * Xc) + ridge * np.eye(d)
    b = Xc.T @ (w * yc)
    if ridge == 0.0 and np.linalg.matrix_rank(A) < d:
        raise SingularSystemError("normal matrix is rank deficient and ridge is zero")
    return np.linalg.solve(A, b)


def weighted_lsq_full(env: Neighborhood, ridge: float = 1e-8) -> tuple[np.ndarray, float]:
    slope = weighted_lsq(env, ridge)
    _, _, xbar, ybar, _ = _weighted_center(env.X, env.targets, env.weights)
    return slope, ybar - float(slope @ xbar)


def project_l1_ball(v: np.ndarray, t: float) -> np.ndarray:
    """Euclidean projection onto {u : |u|_1 <= t}."""
    if t <= 0:
        raise ValueError("t must be positive")
    return _kernels.project_l1_ball(np.asarray(v, dtype=np.float64), float(t))


def lambda_max(G: np.ndarray, iters: int = 200, tol: float = 1e-12) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    d = G.shape[0]
    v = rng_from(0).standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        u = G @ v
        nu = float(np.linalg.norm(u))
        if nu == 0.0:
            return 0.0
        v = u / nu
        if abs(nu - lam) <= tol * max(1.0, nu):
            return nu
        lam = nu
    return lam


def _env_quadratic(env: Neighborhood, center: bool = False):
    """Quadratic data (G, c) of a player's objective |y - X(s+w)|_W^2.

    Weights are rescaled by their max (fit-invariant) to keep the quadratic
    well conditioned under tiny kernel widths; all-zero weights yield a zero
    quadratic, i.e. a vacuous player.
    """
    w = env.weights
    peak = w.max() if w.size else 0.0
    w = w / peak if peak > 0.0 else w
    if center:
        Xc, yc, _, _, w = _weighted_center(env.X, env.targets, env.weights)
    else:
        Xc, yc = env.X, env.targets
    G = Xc.T @ (w[:, None] * Xc)
    c = Xc.T @ (w * yc)
    return G, c


def _step_size(G: np.ndarray) -> float:
    # 1/L with L = 2*lambda_max, padded 2% against power-iteration shortfall
    return 1.0 / max(2.0 * lambda_max(G) * 1.02, 1e-12)


def best_response(env_index: int, others_sum: np.ndarray, env: Neighborhood,
                  cfg: GameConfig) -> np.ndarray:
    """One player's constrained optimum given the other players' sum.

    Projected gradient descent over the box intersected with the shifted l1
    ball; data is used as given (play_game centers its environments before
    calling into the kernel).
    """
    G, c = _env_quadratic(env, center=False)
    s = np.asarray(others_sum, dtype=np.float64)
    w, _, diverged = _kernels.best_response(
        G, c, s, np.zeros_like(s), cfg.gamma, cfg.t, _step_size(G),
        cfg.inner_max_iters, cfg.inner_tol,
    )
    if diverged:
        raise InnerDivergenceError(
            f"inner solver for environment {env_index} increased its objective "
            "on 10 consecutive steps (step-size estimation failure)"
        )
    return w


def play_game(es: EnvironmentSet, cfg: GameConfig) -> tuple[Attribution, PlayerState]:
    """Round-robin best responses until no player moves more than epsilon.

    Players fit their environments as given, with no intercept term (the
    box and l1 bounds constrain every coefficient); the reported intercept
    is recovered afterward as the weighted mean residual over the base
    neighborhood.
    """
    if es.k != cfg.k:
        raise ValueError(f"environment set has k={es.k} but config expects k={cfg.k}")
    d = es.base.dim
    G = np.empty((cfg.k, d, d))
    c = np.empty((cfg.k, d))
    steps = np.empty(cfg.k)
    for i, env in enumerate(es.envs):
        G[i], c[i] = _env_quadratic(env)
        steps[i] = _step_size(G[i])
    W, rounds, converged, deltas, diverged_env = _kernels.run_game(
        G, c, steps, cfg.gamma, cfg.t, cfg.epsilon, cfg.max_rounds,
        cfg.inner_max_iters, cfg.inner_tol,
    )
    if diverged_env >= 0:
        raise InnerDivergenceError(
            f"inner solver for environment {diverged_env} increased its objective "
            "on 10 consecutive steps (step-size estimation failure)"
        )
    w = W.sum(axis=0)
    base = es.base
    sw = base.weights.sum()
    if sw > 0:
        intercept = float(base.weights @ (base.targets - base.X @ w)) / sw
    else:
        intercept = float(np.mean(base.targets - base.X @ w))
    attribution = Attribution(
        coefficients=w,
        intercept=intercept,
        support=frozenset(np.nonzero(w)[0].tolist()),
    )
    state = PlayerState(W, rounds, bool(converged), deltas)
    return attribution, state


def ne_oracle_two(w1_star: np.ndarray, w2_star: np.ndarray, gamma: float) -> np.ndarray:
    """Closed-form two-player equilibrium: zero where signs disagree,
    otherwise the entry of smaller magnitude (ties keep the first vector's).

    gamma is part of the rule's validity regime (it must exceed both
    magnitudes of same-sign coordinates) but does not enter the formula.
    """
    w1 = np.asarray(w1_star, dtype=np.float64)
    w2 = np.asarray(w2_star, dtype=np.float64)
    if w1.shape != w2.shape:
        raise ValueError("vectors must have the same length")
    keep = (w1 * w2 >= 0.0).astype(np.float64)
    pick_first = np.abs(w2) >= np.abs(w1)
    return np.where(pick_first, w1, w2) * keep


def ne_oracle_multi(w_stars, gamma: float) -> np.ndarray:
    """k-player equilibrium rule: per-feature median for odd k; for even k
    the two-player rule applied to the two middle values."""
    A = np.stack([np.asarray(w, dtype=np.float64) for w in w_stars])
    k = A.shape[0]
    if k < 2:
        raise ValueError("need k >= 2 attribution vectors")
    S = np.sort(A, axis=0)
    if k % 2 == 1:
        return S[k // 2].copy()
    return ne_oracle_two(S[k // 2 - 1], S[k // 2], gamma)


def sparsify(es: EnvironmentSet, K: int, ridge_alt: float | None = None) -> frozenset[int]:
    """Feature indices the game is restricted to.

    Lasso-path selection on the base neighborhood: the K largest-magnitude
    coefficients at the sparsest path point with at least K active features.
    Dense mode (ridge_alt set) and K >= d return every index.
    """
    d = es.base.dim
    if ridge_alt is not None or K >= d:
        return frozenset(range(d))
    base = es.base
    alphas, coefs = weighted_lasso_path(base.X, base.targets, base.weights)
    return frozenset(path_support(coefs, K))


def default_gamma(es: EnvironmentSet, K: int) -> float:
    """Box bound derived from per-environment sparse linear fits: the largest
    coefficient magnitude across environments. t then defaults to gamma*d."""
    from ..baselines import LimeConfig, lime_explain  # late import; baselines uses this module's helpers

    cfg = LimeConfig(K=K)
    peak = 0.0
    for env in es.envs:
        attribution = lime_explain(env, cfg)
        if attribution.coefficients.size:
            peak = max(peak, float(np.max(np.abs(attribution.coefficients))))
    if peak == 0.0:
        raise DegenerateGammaError("all per-environment coefficients are zero")
    return peak
