"""Per-example perturbation neighborhoods and their environment splits.

A neighborhood is the base sample set drawn around the example being
explained; environments are bootstrap resamples of it. Targets are computed
on the base once and carried into every environment, so building k
environments costs exactly as many model queries as the base itself.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blackbox import BlackBox
from .core import Dataset, Example, rng_from


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian proximity kernel of width tau*sqrt(d)."""

    tau: float
    dim: int

    @property
    def width(self) -> float:
        return self.tau * float(np.sqrt(self.dim))

    def weights(self, X: np.ndarray, anchor: np.ndarray) -> np.ndarray:
        d2 = np.sum((np.asarray(X, dtype=np.float64) - anchor) ** 2, axis=1)
        return np.exp(-d2 / self.width**2)


@dataclass(frozen=True)
class WeightedSample:
    features: np.ndarray
    target: float
    weight: float


class Neighborhood:
    """A weighted sample set: features (n, d), targets (n,), weights (n,)."""

    def __init__(self, X: np.ndarray, targets: np.ndarray, weights: np.ndarray):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        self.weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        n = self.X.shape[0]
        if self.targets.shape[0] != n or self.weights.shape[0] != n:
            raise ValueError("features, targets, and weights must have equal length")
        if not (np.all(np.isfinite(self.targets)) and np.all(np.isfinite(self.weights))):
            raise ValueError("targets and weights must be finite")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __getitem__(self, i: int) -> WeightedSample:
        return WeightedSample(self.X[i], float(self.targets[i]), float(self.weights[i]))

    def take(self, indices: np.ndarray) -> "Neighborhood":
        idx = np.asarray(indices, dtype=np.int64)
        return Neighborhood(self.X[idx], self.targets[idx], self.weights[idx])

    def restrict(self, columns) -> "Neighborhood":
        cols = np.asarray(sorted(columns), dtype=np.int64)
        return Neighborhood(self.X[:, cols], self.targets, self.weights)


@dataclass(frozen=True)
class EnvironmentSet:
    """The base neighborhood plus its k bootstrap environments."""

    base: Neighborhood
    envs: tuple[Neighborhood, ...]
    anchor: Example

    def __post_init__(self):
        if len(self.envs) < 2:
            raise ValueError("an environment set needs k >= 2 environments")

    @property
    def k(self) -> int:
        return len(self.envs)

    def restrict(self, columns) -> "EnvironmentSet":
        cols = sorted(columns)
        anchor = Example(self.anchor.features[np.asarray(cols, dtype=np.int64)],
                         self.anchor.label)
        return EnvironmentSet(
            self.base.restrict(cols),
            tuple(env.restrict(cols) for env in self.envs),
            anchor,
        )


def random_perturbation(anchor: Example, n: int, sigma, bb: BlackBox,
                        kernel: KernelSpec, seed: int) -> Neighborhood:
    """Zero-mean Gaussian perturbations around the anchor."""
    if n < 2:
        raise ValueError("need at least 2 samples")
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (anchor.dim,))
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    rng = rng_from(seed)
    X = anchor.features + rng.standard_normal((n, anchor.dim)) * sigma
    targets = bb.predict_batch(X)
    weights = kernel.weights(X, anchor.features)
    return Neighborhood(X, targets, weights)


def kde_generation(train: Dataset, anchor: Example, n: int, bandwidth: float,
                   bb: BlackBox, kernel: KernelSpec, seed: int) -> Neighborhood:
    """Samples from a Gaussian KDE over the training set, localized at the anchor.

    Training points are selected with probability proportional to their
    Gaussian-kernel proximity to the anchor (scale = bandwidth), then jittered
    with N(0, bandwidth^2 I).
    """
    if len(train) == 0:
        raise ValueError("training set must be nonempty")
    if bandwidth < 0:
        raise ValueError("bandwidth must be nonnegative")
    rng = rng_from(seed)
    d2 = np.sum((train.features - anchor.features) ** 2, axis=1)
    if bandwidth > 0:
        logits = -d2 / (2.0 * bandwidth**2)
        probs = np.exp(logits - logits.max())
    else:
        probs = (d2 == d2.min()).astype(np.float64)
    probs /= probs.sum()
    idx = rng.choice(len(train), size=n, p=probs)
    X = train.features[idx] + rng.standard_normal((n, train.dim)) * bandwidth
    targets = bb.predict_batch(X)
    weights = kernel.weights(X, anchor.features)
    return Neighborhood(X, targets, weights)


def exemplar_selection(pool: Dataset, anchor: Example, n: int, bb: BlackBox) -> Neighborhood:
    """The n pool examples nearest the anchor (Euclidean), uniform weights."""
    if len(pool) < n:
        raise ValueError("pool must hold at least n examples")
    d2 = np.sum((pool.features - anchor.features) ** 2, axis=1)
    idx = np.argsort(d2, kind="stable")[:n]
    X = pool.features[idx]
    targets = bb.predict_batch(X)
    return Neighborhood(X, targets, np.ones(n))


def bootstrap_environments(base: Neighborhood, k: int, seed: int,
                           anchor: Example) -> EnvironmentSet:
    """k bootstrap resamples of the base, each of the base's size.

    (feature, target, weight) triples are resampled jointly; no model queries
    are made here.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    n = len(base)
    rng = rng_from(seed)
    envs = tuple(base.take(rng.integers(0, n, size=n)) for _ in range(k))
    return EnvironmentSet(base, envs, anchor)
