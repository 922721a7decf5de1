"""Domain types, deterministic RNG handling, and dataset I/O.

Features are processed in standardized form (per-feature z-score using
training-set statistics); raw-unit attributions are recoverable by dividing
coefficients by the per-feature std.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyDatasetError, SchemaError

CLASSIFICATION = "classification"
REGRESSION = "regression"


def as_seed(seed: int) -> int:
    """Normalize a seed to an unsigned 64-bit integer."""
    return int(seed) & 0xFFFFFFFFFFFFFFFF


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child seed from a root seed and integer keys.

    Deterministic: the same (seed, keys) always yields the same child. Used
    to give every example / environment an independent RNG stream.
    """
    ss = np.random.SeedSequence(entropy=[as_seed(seed), *[int(k) & 0xFFFFFFFF for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_from(seed: int) -> np.random.Generator:
    return np.random.default_rng(as_seed(seed))


@dataclass(frozen=True)
class Example:
    """One feature vector with an optional label."""

    features: np.ndarray
    label: float | int | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 1 or feats.size < 1:
            raise SchemaError("example features must be a nonempty 1-d vector")
        if not np.all(np.isfinite(feats)):
            raise SchemaError("example features contain NaN or Inf")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)

    @property
    def dim(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of examples sharing a feature space."""

    features: np.ndarray  # (n, d)
    labels: np.ndarray | None
    feature_names: tuple[str, ...]
    task: str
    class_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise SchemaError("dataset features must be a 2-d matrix")
        if feats.shape[0] == 0:
            raise EmptyDatasetError("dataset has zero examples")
        if feats.shape[1] != len(self.feature_names):
            raise SchemaError("feature_names length does not match feature dimension")
        if not np.all(np.isfinite(feats)):
            raise SchemaError("dataset features contain NaN or Inf")
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise SchemaError(f"unknown task {self.task!r}")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (feats.shape[0],):
                raise SchemaError("labels length does not match example count")
            if self.task == CLASSIFICATION:
                labels = labels.astype(np.int64)
                if labels.size and labels.min() < 0:
                    raise SchemaError("classification labels must be nonnegative")
            else:
                labels = labels.astype(np.float64)
                if not np.all(np.isfinite(labels)):
                    raise SchemaError("regression labels contain NaN or Inf")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.task != CLASSIFICATION or self.labels is None:
            return 0
        return int(self.labels.max()) + 1

    def example(self, i: int) -> Example:
        label = None if self.labels is None else self.labels[i]
        return Example(self.features[i], label)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(self.features[idx], labels, self.feature_names, self.task, self.class_names)

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(features, self.labels, self.feature_names, self.task, self.class_names)


@dataclass(frozen=True)
class Attribution:
    """A local linear explanation: per-feature coefficients plus intercept."""

    coefficients: np.ndarray
    intercept: float
    support: frozenset[int]
    query_count: int = 0

    def __post_init__(self):
        coefs = np.asarray(self.coefficients, dtype=np.float64)
        coefs.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "support", frozenset(int(i) for i in self.support))
        for i in range(coefs.shape[0]):
            if i not in self.support and coefs[i] != 0.0:
                raise ValueError("nonzero coefficient outside the declared support")

    def predict(self, x: np.ndarray) -> float:
        return float(self.coefficients @ np.asarray(x, dtype=np.float64) + self.intercept)


def load_csv(path, task: str, label_column: str | None = None) -> Dataset:
    """Load a comma-separated, UTF-8, header-mandatory CSV into a Dataset.

    Every non-label column must be numeric ('.' decimal separator); a text
    cell in a feature column or a ragged row raises SchemaError. String
    labels of classification tasks are mapped to [0, C) by sorted order.
    """
    if task not in (CLASSIFICATION, REGRESSION):
        raise SchemaError(f"unknown task {task!r}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: file is empty") from None
        rows = list(reader)
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")
    label_idx = None
    if label_column is not None:
        if label_column not in header:
            raise SchemaError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
    feature_cols = [i for i in range(len(header)) if i != label_idx]
    feature_names = tuple(header[i] for i in feature_cols)

    features = np.empty((len(rows), len(feature_cols)), dtype=np.float64)
    raw_labels: list[str] = []
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        for c, col in enumerate(feature_cols):
            try:
                features[r, c] = float(row[col])
            except ValueError:
                raise SchemaError(
                    f"{path}: non-numeric value {row[col]!r} in column {header[col]!r}, row {r + 2}"
                ) from None
        if not np.all(np.isfinite(features[r])):
            raise SchemaError(f"{path}: non-finite feature value in row {r + 2}")
        if label_idx is not None:
            raw_labels.append(row[label_idx])

    labels = None
    class_names: tuple[str, ...] = ()
    if label_idx is not None:
        if task == REGRESSION:
            try:
                labels = np.array([float(v) for v in raw_labels])
            except ValueError:
                raise SchemaError(f"{path}: non-numeric regression label") from None
        else:
            try:
                numeric = [float(v) for v in raw_labels]
            except ValueError:
                names = sorted(set(raw_labels))
                mapping = {name: i for i, name in enumerate(names)}
                labels = np.array([mapping[v] for v in raw_labels], dtype=np.int64)
                class_names = tuple(names)
            else:
                labels = np.array(numeric)
                if not np.all(labels == np.round(labels)):
                    raise SchemaError(f"{path}: classification labels must be integers")
                labels = labels.astype(np.int64)
    return Dataset(features, labels, feature_names, task, class_names)


def save_csv(ds: Dataset, path, label_column: str = "label") -> None:
    """Write a Dataset back to CSV with round-trip float formatting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = list(ds.feature_names)
        if ds.labels is not None:
            header.append(label_column)
        writer.writerow(header)
        for i in range(len(ds)):
            row = [repr(float(v)) for v in ds.features[i]]
            if ds.labels is not None:
                label = ds.labels[i]
                if ds.task == CLASSIFICATION and ds.class_names:
                    row.append(ds.class_names[int(label)])
                elif ds.task == CLASSIFICATION:
                    row.append(str(int(label)))
                else:
                    row.append(repr(float(label)))
            writer.writerow(row)


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint random partition with ceil((1-f)*n) training examples."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = len(ds)
    n_train = int(np.ceil((1.0 - test_fraction) * n))
    perm = rng_from(seed).permutation(n)
    return ds.subset(np.sort(perm[:n_train])), ds.subset(np.sort(perm[n_train:]))


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-score transform fitted on training data.

    Zero-variance features keep std=1 so the transform is a no-op for them.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "Standardizer":
        feats = np.asarray(features, dtype=np.float64)
        mean = feats.mean(axis=0)
        std = feats.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean, std)

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std

    def inverse(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) * self.std + self.mean

    def transform_dataset(self, ds: Dataset) -> Dataset:
        return ds.with_features(self.transform(ds.features))
