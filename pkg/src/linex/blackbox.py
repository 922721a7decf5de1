"""Query-only access to the model being explained.

Every model is wrapped behind the same batch interface: a function from
feature vectors to one real output per vector. Classification models expose
the probability of a single class (``class_of_interest``); which class is a
per-run choice. Access to external models crosses a child-process boundary
over an NDJSON stdio protocol.
"""
from __future__ import annotations

import json
import subprocess
import threading
from collections import deque
from queue import Empty, Queue

import numpy as np

from .core import CLASSIFICATION, REGRESSION, Dataset, Standardizer, rng_from
from .errors import (
    BlackBoxError,
    ProtocolError,
    QueryTimeoutError,
    SpawnError,
    TrainError,
)


class BlackBox:
    """Behavioral interface: batches of feature vectors in, reals out.

    Implementations must be pure (identical batch -> identical outputs) and
    safe for concurrent ``predict_batch`` calls.
    """

    dimension: int
    task: str
    class_of_interest: int | None = None

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_one(self, x: np.ndarray) -> float:
        return float(self.predict_batch(np.asarray(x, dtype=np.float64)[None, :])[0])

    def _check_output(self, y: np.ndarray, n: int) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.shape[0] != n:
            raise BlackBoxError(f"model returned {y.shape[0]} values for {n} inputs")
        if not np.all(np.isfinite(y)):
            raise BlackBoxError("model returned non-finite values")
        if self.task == CLASSIFICATION and (y.min() < -1e-12 or y.max() > 1 + 1e-12):
            raise BlackBoxError("classification probabilities must lie in [0, 1]")
        return y


class LinearBlackBox(BlackBox):
    """f(x) = w.x + b, the exact linear fixture."""

    def __init__(self, weights, intercept: float = 0.0):
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(w)) or not np.isfinite(intercept):
            raise BlackBoxError("linear model parameters must be finite")
        self.weights = w
        self.intercept = float(intercept)
        self.dimension = w.shape[0]
        self.task = REGRESSION

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self._check_output(X @ self.weights + self.intercept, X.shape[0])


def builtin_linear(weights, intercept: float = 0.0) -> BlackBox:
    return LinearBlackBox(weights, intercept)


class PiecewiseSignBlackBox(BlackBox):
    """f(x) = magnitude * |x[axis]|: the gradient flips sign at x[axis] = 0."""

    def __init__(self, dimension: int, axis: int, magnitude: float = 1.0):
        if not 0 <= axis < dimension:
            raise BlackBoxError("axis must be a valid feature index")
        self.dimension = int(dimension)
        self.axis = int(axis)
        self.magnitude = float(magnitude)
        self.task = REGRESSION

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self._check_output(self.magnitude * np.abs(X[:, self.axis]), X.shape[0])


def builtin_piecewise_sign(dimension: int, axis: int, magnitude: float = 1.0) -> BlackBox:
    return PiecewiseSignBlackBox(dimension, axis, magnitude)


# ---------------------------------------------------------------------------
# Bagged decision trees (the desk-scale stand-in for a random forest).

def _split_classification(X, y, n_classes):
    """Best (feature, threshold) by weighted Gini; None when no split helps."""
    n = X.shape[0]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    best = (np.inf, -1, 0.0)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        left = np.cumsum(onehot[order], axis=0)[:-1]
        nl = np.arange(1, n, dtype=np.float64)
        nr = n - nl
        right = left[-1] + onehot[order[-1]] - left
        gini_l = 1.0 - np.sum((left / nl[:, None]) ** 2, axis=1)
        gini_r = 1.0 - np.sum((right / nr[:, None]) ** 2, axis=1)
        score = (nl * gini_l + nr * gini_r) / n
        valid = xs[1:] > xs[:-1]
        if not np.any(valid):
            continue
        score = np.where(valid, score, np.inf)
        i = int(np.argmin(score))
        if score[i] < best[0]:
            best = (float(score[i]), j, float(0.5 * (xs[i] + xs[i + 1])))
    return None if best[1] < 0 else best[1:]


def _split_regression(X, y):
    n = X.shape[0]
    best = (np.inf, -1, 0.0)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        s1 = np.cumsum(ys)[:-1]
        s2 = np.cumsum(ys**2)[:-1]
        nl = np.arange(1, n, dtype=np.float64)
        sse_l = s2 - s1**2 / nl
        t1, t2 = ys.sum() - s1, (ys**2).sum() - s2
        sse_r = t2 - t1**2 / (n - nl)
        score = sse_l + sse_r
        valid = xs[1:] > xs[:-1]
        if not np.any(valid):
            continue
        score = np.where(valid, score, np.inf)
        i = int(np.argmin(score))
        if score[i] < best[0]:
            best = (float(score[i]), j, float(0.5 * (xs[i] + xs[i + 1])))
    return None if best[1] < 0 else best[1:]


class _FlatTree:
    """A decision tree as parallel lists walked per sample.

    feature[i] < 0 marks a leaf; value[i] then holds the prediction (class
    index or mean). Plain lists keep the per-hop cost low for the small
    batches local explanation produces.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _add(self, feature, threshold, value) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.feature) - 1

    def grow(self, X, y, depth, max_depth, n_classes) -> int:
        if n_classes:
            counts = np.bincount(y, minlength=n_classes)
            split = None
            if depth < max_depth and counts.max() < len(y):
                split = _split_classification(X, y, n_classes)
            if split is None:
                return self._add(-1, 0.0, float(np.argmax(counts)))
        else:
            split = None
            if depth < max_depth and len(y) >= 2 and not np.all(y == y[0]):
                split = _split_regression(X, y)
            if split is None:
                return self._add(-1, 0.0, float(np.mean(y)))
        j, thr = split
        node = self._add(j, thr, 0.0)
        mask = X[:, j] <= thr
        self.left[node] = self.grow(X[mask], y[mask], depth + 1, max_depth, n_classes)
        self.right[node] = self.grow(X[~mask], y[~mask], depth + 1, max_depth, n_classes)
        return node

    def predict_into(self, rows, out, t):
        feature, threshold = self.feature, self.threshold
        left, right, value = self.left, self.right, self.value
        for r, x in enumerate(rows):
            i = 0
            f = feature[0]
            while f >= 0:
                i = left[i] if x[f] <= threshold[i] else right[i]
                f = feature[i]
            out[t, r] = value[i]


class ForestBlackBox(BlackBox):
    """Bagged decision trees; classification outputs are vote fractions."""

    def __init__(self, ds: Dataset, trees: int = 50, max_depth: int = 8, seed: int = 0,
                 class_of_interest: int | None = None):
        if ds.labels is None:
            raise TrainError("forest training needs a labeled dataset")
        self.dimension = ds.dim
        self.task = ds.task
        self._n_classes = 0
        if ds.task == CLASSIFICATION:
            self._n_classes = ds.n_classes
            counts = np.bincount(ds.labels, minlength=self._n_classes)
            if self._n_classes < 2 or np.any(counts == 0):
                raise TrainError("every class in [0, C) must appear in the training split")
            self.class_of_interest = 0 if class_of_interest is None else int(class_of_interest)
        X = np.asarray(ds.features, dtype=np.float64)
        y = ds.labels
        rng = rng_from(seed)
        self._trees: list[_FlatTree] = []
        for _ in range(trees):
            idx = rng.integers(0, len(ds), size=len(ds))
            tree = _FlatTree()
            tree.grow(X[idx], y[idx], 0, max_depth, self._n_classes)
            self._trees.append(tree)

    def _votes(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        preds = np.empty((len(self._trees), X.shape[0]))
        rows = X.tolist()
        for t, tree in enumerate(self._trees):
            tree.predict_into(rows, preds, t)
        return preds

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """(n, C) vote-fraction matrix; classification only."""
        votes = self._votes(X)
        out = np.empty((votes.shape[1], self._n_classes))
        for c in range(self._n_classes):
            out[:, c] = np.mean(votes == c, axis=0)
        return out

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.task == CLASSIFICATION:
            y = self.predict_proba(X)[:, self.class_of_interest]
        else:
            y = self._votes(X).mean(axis=0)
        return self._check_output(y, X.shape[0])

    def for_class(self, c: int) -> "ForestBlackBox":
        """Cheap view of the same ensemble explaining another class channel."""
        view = object.__new__(ForestBlackBox)
        view.__dict__ = dict(self.__dict__)
        view.class_of_interest = int(c)
        return view


def builtin_forest(ds: Dataset, trees: int = 50, max_depth: int = 8, seed: int = 0,
                   class_of_interest: int | None = None) -> ForestBlackBox:
    return ForestBlackBox(ds, trees, max_depth, seed, class_of_interest)


# ---------------------------------------------------------------------------
# External models over the NDJSON stdio protocol.

MAX_SUBPROCESS_BATCH = 1024


class SubprocessBlackBox(BlackBox):
    """Client side of the NDJSON wire protocol.

    One JSON object per line on the child's stdin/stdout. The handshake
    ``{"op":"meta"}`` establishes dimension and task; each predict request
    carries an id the child must echo, replying in request order. Protocol
    access is serialized internally; the facade is safe to call from
    multiple threads.
    """

    def __init__(self, command: list[str], timeout: float = 30.0):
        self._timeout = float(timeout)
        try:
            self._proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise SpawnError(f"could not start {command!r}: {exc}") from exc
        self._lock = threading.Lock()
        self._next_id = 0
        self._lines: Queue = Queue()
        self._stderr_tail: deque[str] = deque(maxlen=20)
        self._stdout_reader = threading.Thread(target=self._read_stdout, daemon=True)
        self._stderr_reader = threading.Thread(target=self._read_stderr, daemon=True)
        self._stdout_reader.start()
        self._stderr_reader.start()

        meta = self._roundtrip({"op": "meta"})
        try:
            self.dimension = int(meta["d"])
            self.task = str(meta["task"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed handshake reply: {meta!r}") from exc
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise ProtocolError(f"handshake reported unknown task {self.task!r}")
        self.classes = int(meta["classes"]) if "classes" in meta else None

    def _read_stdout(self):
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(None)

    def _read_stderr(self):
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip())

    def _diag(self) -> str:
        tail = " | ".join(self._stderr_tail) or "<no stderr>"
        return f"child stderr: {tail}"

    def _roundtrip(self, request: dict) -> dict:
        # caller must hold no lock for meta; predict path locks around this
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProtocolError(f"child pipe closed; {self._diag()}") from exc
        try:
            line = self._lines.get(timeout=self._timeout)
        except Empty:
            raise QueryTimeoutError(
                f"no reply within {self._timeout}s; {self._diag()}"
            ) from None
        if line is None:
            raise ProtocolError(f"child closed stdout; {self._diag()}")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"non-JSON reply line {line!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"reply is not a JSON object: {reply!r}")
        return reply

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape[0])
        with self._lock:
            for start in range(0, X.shape[0], MAX_SUBPROCESS_BATCH):
                chunk = X[start:start + MAX_SUBPROCESS_BATCH]
                request_id = self._next_id
                self._next_id += 1
                reply = self._roundtrip(
                    {"op": "predict", "id": request_id, "x": chunk.tolist()}
                )
                if reply.get("id") != request_id:
                    raise ProtocolError(
                        f"reply id {reply.get('id')!r} does not match request {request_id}"
                    )
                y = reply.get("y")
                if not isinstance(y, list) or len(y) != chunk.shape[0]:
                    raise ProtocolError(
                        f"reply length {len(y) if isinstance(y, list) else 'n/a'} "
                        f"does not match batch size {chunk.shape[0]}"
                    )
                out[start:start + chunk.shape[0]] = y
        return self._check_output(out, X.shape[0])

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def subprocess_blackbox(command: list[str], timeout: float = 30.0) -> SubprocessBlackBox:
    return SubprocessBlackBox(command, timeout)


# ---------------------------------------------------------------------------
# Query accounting.

class QueryLedger:
    """Thread-safe counters of individual vector evaluations and cache hits."""

    def __init__(self):
        self._lock = threading.Lock()
        self._total = 0
        self._hits = 0

    def add(self, queries: int, hits: int) -> None:
        with self._lock:
            self._total += queries
            self._hits += hits

    @property
    def total_queries(self) -> int:
        with self._lock:
            return self._total

    @property
    def cache_hits(self) -> int:
        with self._lock:
            return self._hits


class CachingBlackBox(BlackBox):
    """Memoizes by the exact bit pattern of each input vector.

    The cache never changes a returned value; only misses reach the wrapped
    model, and only they count as queries in the ledger.
    """

    def __init__(self, bb: BlackBox, ledger: QueryLedger | None = None):
        self._bb = bb
        self.ledger = ledger if ledger is not None else QueryLedger()
        self.dimension = bb.dimension
        self.task = bb.task
        self.class_of_interest = bb.class_of_interest
        self._lock = threading.Lock()
        self._cache: dict[bytes, float] = {}

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        n = X.shape[0]
        keys = [X[i].tobytes() for i in range(n)]
        out = np.empty(n)
        with self._lock:
            missing = [i for i, k in enumerate(keys) if k not in self._cache]
            # first occurrence per distinct missing key queries the model once
            fresh: dict[bytes, int] = {}
            for i in missing:
                fresh.setdefault(keys[i], i)
        if fresh:
            rows = sorted(fresh.values())
            values = self._bb.predict_batch(X[rows])
            with self._lock:
                for r, v in zip(rows, values):
                    self._cache[keys[r]] = float(v)
        with self._lock:
            for i, k in enumerate(keys):
                out[i] = self._cache[k]
        self.ledger.add(len(fresh), n - len(fresh))
        return out


def with_cache(bb: BlackBox, ledger: QueryLedger | None = None) -> CachingBlackBox:
    return CachingBlackBox(bb, ledger)


class StandardizedBlackBox(BlackBox):
    """Adapts a raw-unit model to the standardized explanation space."""

    def __init__(self, bb: BlackBox, scaler: Standardizer):
        self._bb = bb
        self._scaler = scaler
        self.dimension = bb.dimension
        self.task = bb.task
        self.class_of_interest = bb.class_of_interest

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return self._bb.predict_batch(self._scaler.inverse(X))
