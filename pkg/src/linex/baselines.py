"""LIME and S-LIME comparators, sharing neighborhoods with the game solver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Attribution
from .neighborhood import EnvironmentSet, KernelSpec, Neighborhood
from .wlasso import debias_ridge, path_support, weighted_lasso_path, weighted_ridge


@dataclass(frozen=True)
class LimeConfig:
    """Sparsity budget and fit mode for the weighted sparse linear fit."""

    K: int = 5
    kernel: KernelSpec | None = None  # informational; weights live in the samples
    ridge_alt: float | None = None  # dense mode: ridge penalty instead of lasso

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("sparsity budget K must be >= 1")


def lime_explain(base: Neighborhood, cfg: LimeConfig) -> Attribution:
    """Weighted sparse linear fit on a perturbation neighborhood.

    Lasso-path feature selection followed by a near-unpenalized weighted
    ridge on the selected support (debiasing); dense mode fits a weighted
    ridge with cfg.ridge_alt over all features.
    """
    d = base.dim
    if cfg.ridge_alt is not None:
        coef, intercept = weighted_ridge(base.X, base.targets, base.weights, cfg.ridge_alt)
        support = frozenset(range(d))
    else:
        _, coefs = weighted_lasso_path(base.X, base.targets, base.weights)
        support = frozenset(path_support(coefs, cfg.K))
        coef, intercept = debias_ridge(base.X, base.targets, base.weights, support)
    return Attribution(coefficients=coef, intercept=intercept, support=support)


def slime_explain(es: EnvironmentSet, cfg: LimeConfig) -> Attribution:
    """Arithmetic mean of independent per-environment fits.

    Coefficients are averaged over the union of supports (absent features
    count as zero); intercepts are averaged too.
    """
    fits = [lime_explain(env, cfg) for env in es.envs]
    coef = np.mean([f.coefficients for f in fits], axis=0)
    intercept = float(np.mean([f.intercept for f in fits]))
    support = frozenset().union(*[f.support for f in fits])
    return Attribution(coefficients=coef, intercept=intercept, support=support)
