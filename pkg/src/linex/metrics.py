"""Evaluation metrics over a test set of explained examples.

Faithfulness (INFD, GI), stability (CI, CAC), and sign-consistency
(upsilon), plus exemplar-neighbor search and the paired significance test
used in benchmark reports.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .core import CLASSIFICATION, Attribution
from .errors import DegenerateClassError, DegenerateVarianceError


@dataclass(frozen=True)
class ExplainedSet:
    """Explained test examples: features, attributions, model values, and
    each example's exemplar neighborhood within the test set."""

    features: np.ndarray  # (n, d), standardized
    attributions: tuple[Attribution, ...]
    blackbox_values: np.ndarray  # (n,)
    neighbors: np.ndarray  # (n, exemplar_k) indices into the test set
    task: str
    labels: np.ndarray | None = None

    def __post_init__(self):
        n = self.features.shape[0]
        if len(self.attributions) != n or self.blackbox_values.shape[0] != n:
            raise ValueError("every test example needs exactly one attribution and value")
        if self.neighbors.shape[0] != n:
            raise ValueError("every test example needs a neighbor list")

    @property
    def coefficient_matrix(self) -> np.ndarray:
        return np.stack([a.coefficients for a in self.attributions])

    @property
    def intercepts(self) -> np.ndarray:
        return np.array([a.intercept for a in self.attributions])

    def surrogate_value(self, owner: int, at: int) -> float:
        """Prediction at example `at` using the explanation fitted at `owner`."""
        return self.attributions[owner].predict(self.features[at])


@dataclass
class MetricsReport:
    """One method's metric values with per-example breakdowns.

    dispersion holds the standard error of the mean across a kernel-width
    sweep and is filled by the benchmark aggregator.
    """

    infd: float
    gi: float
    ci: float
    upsilon: float
    cac: float | None = None
    per_example: dict = field(default_factory=dict)
    dispersion: dict = field(default_factory=dict)


def exemplar_neighbors(features: np.ndarray, k: int) -> np.ndarray:
    """Per example, the k nearest other examples by Euclidean distance.

    Ties break toward the lower index; an example is never its own neighbor.
    """
    X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < number of examples")
    d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def per_example_infd(es: ExplainedSet) -> np.ndarray:
    own = np.array([es.surrogate_value(i, i) for i in range(len(es.attributions))])
    return np.abs(es.blackbox_values - own)


def infd(es: ExplainedSet) -> float:
    """Mean absolute error between model and explanation at each test point."""
    return float(np.mean(per_example_infd(es)))


def per_example_gi(es: ExplainedSet) -> np.ndarray:
    out = np.empty(len(es.attributions))
    for i in range(len(es.attributions)):
        vals = [abs(es.blackbox_values[i] - es.surrogate_value(j, i)) for j in es.neighbors[i]]
        out[i] = np.mean(vals)
    return out


def gi(es: ExplainedSet) -> float:
    """Mean absolute error at each test point under its neighbors' explanations."""
    return float(np.mean(per_example_gi(es)))


def per_example_ci(es: ExplainedSet) -> np.ndarray:
    C = es.coefficient_matrix
    out = np.empty(C.shape[0])
    for i in range(C.shape[0]):
        out[i] = np.mean([np.sum(np.abs(C[i] - C[j])) for j in es.neighbors[i]])
    return out


def ci(es: ExplainedSet) -> float:
    """Mean l1 distance between attributions of neighbors (lower = stabler)."""
    return float(np.mean(per_example_ci(es)))


def cac_per_class(es: ExplainedSet, labels: np.ndarray | None = None):
    """Per-class Pearson correlation between mean attribution and mean input.

    Classes whose mean vectors are constant are skipped (correlation is
    undefined there) and reported in the second return value.
    """
    if es.task != CLASSIFICATION:
        raise ValueError("class-attribution consistency needs a classification task")
    labels = es.labels if labels is None else np.asarray(labels)
    if labels is None:
        raise ValueError("class assignments are required")
    C = es.coefficient_matrix
    per_class: dict[int, float] = {}
    skipped: list[int] = []
    for cls in np.unique(labels):
        mask = labels == cls
        mu_e = C[mask].mean(axis=0)
        mu_y = es.features[mask].mean(axis=0)
        if np.std(mu_e) == 0.0 or np.std(mu_y) == 0.0:
            skipped.append(int(cls))
            continue
        per_class[int(cls)] = float(np.corrcoef(mu_e, mu_y)[0, 1])
    return per_class, skipped


def cac(es: ExplainedSet, labels: np.ndarray | None = None) -> float:
    """Average per-class correlation; degenerate classes are skipped with a
    warning, and all-degenerate input raises."""
    per_class, skipped = cac_per_class(es, labels)
    if skipped:
        warnings.warn(f"classes {skipped} skipped: constant mean vector", stacklevel=2)
    if not per_class:
        raise DegenerateClassError("every class had a constant mean vector")
    return float(np.mean(list(per_class.values())))


def upsilon(attribs) -> float:
    """Sign consistency of m attribution vectors, in [0, 1].

    Per feature, the absolute value of the signed count of attribution signs
    (zero coefficients count as zero), normalized by m*d.
    """
    A = np.atleast_2d(np.asarray(attribs, dtype=np.float64))
    m, d = A.shape
    if m < 1 or d < 1:
        raise ValueError("need at least one attribution of at least one feature")
    return float(np.sum(np.abs(np.sign(A).sum(axis=0))) / (m * d))


def per_example_upsilon(es: ExplainedSet) -> np.ndarray:
    """Neighbor-mode sign consistency: each example scored over its own
    attribution together with its exemplar neighbors'."""
    C = es.coefficient_matrix
    out = np.empty(C.shape[0])
    for i in range(C.shape[0]):
        rows = np.concatenate([[i], es.neighbors[i]])
        out[i] = upsilon(C[rows])
    return out


def upsilon_neighbors(es: ExplainedSet) -> float:
    return float(np.mean(per_example_upsilon(es)))


def upsilon_resampled(explain_fn, seeds) -> float:
    """Resampling-mode sign consistency: one example re-explained under the
    given seeds; explain_fn(seed) must return an Attribution."""
    rows = []
    for seed in seeds:
        attribution = explain_fn(seed)
        coefs = attribution.coefficients if isinstance(attribution, Attribution) else attribution
        rows.append(np.asarray(coefs, dtype=np.float64))
    return upsilon(np.stack(rows))


def paired_t_test(a, b) -> float:
    """Two-sided paired t-test p-value via the t CDF."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 2:
        raise ValueError("need two equal-length vectors of at least 2 values")
    diff = a - b
    sd = float(np.std(diff, ddof=1))
    if sd == 0.0:
        raise DegenerateVarianceError("all paired differences are equal")
    n = diff.shape[0]
    t_stat = float(np.mean(diff)) / (sd / np.sqrt(n))
    return float(2.0 * (1.0 - special.stdtr(n - 1, abs(t_stat))))


def compute_report(es: ExplainedSet, with_cac: bool | None = None) -> MetricsReport:
    """All applicable metrics for one explained test set."""
    if with_cac is None:
        with_cac = es.task == CLASSIFICATION and es.labels is not None
    per_example = {
        "infd": per_example_infd(es),
        "gi": per_example_gi(es),
        "ci": per_example_ci(es),
        "upsilon": per_example_upsilon(es),
    }
    cac_value = None
    if with_cac:
        cac_value = cac(es)
    return MetricsReport(
        infd=float(np.mean(per_example["infd"])),
        gi=float(np.mean(per_example["gi"])),
        ci=float(np.mean(per_example["ci"])),
        upsilon=float(np.mean(per_example["upsilon"])),
        cac=cac_value,
        per_example=per_example,
    )
