import os

import numpy as np
import pytest

from linex.core import CLASSIFICATION, REGRESSION, Dataset, load_csv

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
IRIS_CSV = os.path.join(DATA_DIR, "iris.csv")


@pytest.fixture(scope="session")
def iris_path():
    return IRIS_CSV


@pytest.fixture(scope="session")
def iris():
    return load_csv(IRIS_CSV, CLASSIFICATION, label_column="species")


@pytest.fixture(scope="session")
def regression_csv(tmp_path_factory):
    """Synthetic regression table: y = 2*x0 - x1 + 0.5*x2 + noise."""
    rng = np.random.default_rng(123)
    X = rng.standard_normal((80, 3))
    y = 2.0 * X[:, 0] - X[:, 1] + 0.5 * X[:, 2] + 0.1 * rng.standard_normal(80)
    path = tmp_path_factory.mktemp("data") / "reg.csv"
    with open(path, "w") as fh:
        fh.write("a,b,c,target\n")
        for row, value in zip(X, y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{float(value)!r}\n")
    return str(path)


def make_dataset(X, labels=None, task=CLASSIFICATION):
    X = np.asarray(X, dtype=np.float64)
    names = tuple(f"f{i}" for i in range(X.shape[1]))
    return Dataset(X, labels, names, task)
