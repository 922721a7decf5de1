"""End-to-end experiment pipelines behind the CLI.

Everything here is deterministic under the run seed: each example gets a
derived RNG stream, workers gather results in input order, and outputs are
byte-identical across repeated runs except the report's timestamp header.
"""
from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics as metrics_mod
from .baselines import LimeConfig, lime_explain, slime_explain
from .blackbox import (
    BlackBox,
    CachingBlackBox,
    ForestBlackBox,
    StandardizedBlackBox,
    builtin_forest,
    builtin_linear,
    builtin_piecewise_sign,
    subprocess_blackbox,
    with_cache,
)
from .core import (
    CLASSIFICATION,
    REGRESSION,
    Attribution,
    Dataset,
    Example,
    Standardizer,
    derive_seed,
    load_csv,
    rng_from,
    train_test_split,
)
from .errors import ConfigError, DegenerateGammaError, DegenerateVarianceError
from .neighborhood import (
    EnvironmentSet,
    KernelSpec,
    Neighborhood,
    bootstrap_environments,
    exemplar_selection,
    kde_generation,
    random_perturbation,
)
from .solver import (
    GameConfig,
    PlayerState,
    default_gamma,
    ne_oracle_multi,
    ne_oracle_two,
    play_game,
    sparsify,
    weighted_lsq,
)

METHODS = ("linex", "lime", "slime")
NEIGHBORHOOD_KINDS = ("random", "kde", "exemplar")
CONFIG_VERSION = 1

DEFAULT_TAU_GRID = (0.05, 0.1, 0.25, 0.5, 0.75)
DEFAULT_K_GRID = (2, 3, 4, 5)
DEFAULT_N_GRID = (10, 20, 30, 40, 50)


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for every subcommand."""

    dataset_path: str = ""
    task: str = CLASSIFICATION
    label_column: str | None = None
    blackbox: dict = field(default_factory=lambda: {"kind": "forest"})
    class_of_interest: int | None = None
    method: str = "linex"
    methods: tuple[str, ...] = METHODS
    neighborhood_kind: str = "random"
    n: int = 10
    sigma: float = 1.0
    bandwidth: float = 0.3
    k: int = 2
    tau: float | None = None
    tau_grid: tuple[float, ...] = DEFAULT_TAU_GRID
    sparsity: int = 5
    ridge_alt: float | None = None
    exemplar_k: int = 3
    gamma: float | None = None
    t: float | None = None
    epsilon: float = 1e-6
    max_rounds: int = 200
    test_fraction: float = 0.2
    seed: int = 7
    out: str = "runs/out"
    workers: int = 0
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    upsilon_resamples: int = 0

    _FIELD_KEYS = None  # filled after class creation

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        version = raw.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version}")
        known = {f for f in cls.__dataclass_fields__ if not f.startswith("_")}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for key in ("tau_grid", "n_grid", "k_grid", "methods"):
            if key in raw and raw[key] is not None:
                raw[key] = tuple(raw[key])
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise ConfigError(f"task must be classification or regression, got {self.task!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"methods entries must be in {METHODS}, got {m!r}")
        if self.neighborhood_kind not in NEIGHBORHOOD_KINDS:
            raise ConfigError(f"neighborhood kind must be in {NEIGHBORHOOD_KINDS}")
        if not isinstance(self.blackbox, dict) or "kind" not in self.blackbox:
            raise ConfigError("blackbox must be an object with a 'kind'")
        if self.blackbox["kind"] not in ("forest", "linear", "piecewise_sign", "subprocess"):
            raise ConfigError(f"unknown blackbox kind {self.blackbox['kind']!r}")
        if self.n < 2:
            raise ConfigError("neighborhood size n must be >= 2")
        if self.k < 2:
            raise ConfigError("environment count k must be >= 2")
        if self.sparsity < 1:
            raise ConfigError("sparsity budget must be >= 1")
        if self.exemplar_k < 1:
            raise ConfigError("exemplar_k must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if not self.tau_grid or any(tau <= 0 for tau in self.tau_grid):
            raise ConfigError("tau_grid must be nonempty and positive")
        if self.tau is not None and self.tau <= 0:
            raise ConfigError("tau must be positive")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.bandwidth < 0:
            raise ConfigError("bandwidth must be nonnegative")
        if self.epsilon <= 0 or self.max_rounds < 1:
            raise ConfigError("epsilon must be positive and max_rounds >= 1")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError("gamma override must be positive")
        if self.t is not None and self.t <= 0:
            raise ConfigError("t override must be positive")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")

    @property
    def single_tau(self) -> float:
        return self.tau if self.tau is not None else self.tau_grid[0]

    def to_dict(self) -> dict:
        d = {"version": CONFIG_VERSION}
        for name in self.__dataclass_fields__:
            if name.startswith("_"):
                continue
            value = getattr(self, name)
            d[name] = list(value) if isinstance(value, tuple) else value
        return d


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# Run preparation: data, standardization, black-box.

@dataclass
class PreparedRun:
    cfg: RunConfig
    train: Dataset  # standardized
    test: Dataset  # standardized
    scaler: Standardizer
    bb: BlackBox  # operates in standardized space
    test_accuracy: float | None
    channels: np.ndarray | None  # per-test-example class channel, classification only

    def bb_for_example(self, i: int) -> BlackBox:
        if self.channels is None:
            return self.bb
        want = int(self.channels[i])
        if isinstance(self.bb, ForestBlackBox) and self.bb.class_of_interest != want:
            return self.bb.for_class(want)
        return self.bb

    def close(self) -> None:
        closer = getattr(self.bb, "close", None)
        if closer is None and isinstance(self.bb, StandardizedBlackBox):
            closer = getattr(self.bb._bb, "close", None)
        if closer:
            closer()


def _build_blackbox(cfg: RunConfig, train: Dataset) -> BlackBox:
    spec = cfg.blackbox
    kind = spec["kind"]
    if kind == "forest":
        return builtin_forest(
            train,
            trees=int(spec.get("trees", 100)),
            max_depth=int(spec.get("max_depth", 8)),
            seed=derive_seed(cfg.seed, 0xF0),
            class_of_interest=cfg.class_of_interest,
        )
    if kind == "linear":
        return builtin_linear(spec.get("weights", [1.0] * train.dim),
                              float(spec.get("intercept", 0.0)))
    if kind == "piecewise_sign":
        return builtin_piecewise_sign(train.dim, int(spec.get("axis", 0)),
                                      float(spec.get("magnitude", 1.0)))
    if kind == "subprocess":
        command = spec.get("command")
        if not command:
            raise ConfigError("subprocess blackbox needs a 'command' list")
        return subprocess_blackbox(list(command), float(spec.get("timeout", 30.0)))
    raise ConfigError(f"unknown blackbox kind {kind!r}")


def prepare_run(cfg: RunConfig) -> PreparedRun:
    ds = load_csv(cfg.dataset_path, cfg.task, cfg.label_column)
    train, test = train_test_split(ds, cfg.test_fraction, derive_seed(cfg.seed, 0x5))
    scaler = Standardizer.fit(train.features)
    train_s = scaler.transform_dataset(train)
    test_s = scaler.transform_dataset(test)

    bb = _build_blackbox(cfg, train_s)
    if cfg.blackbox["kind"] == "subprocess":
        # external models live in raw units; adapt them to standardized space
        bb = StandardizedBlackBox(bb, scaler)

    accuracy = None
    channels = None
    if cfg.task == CLASSIFICATION and isinstance(bb, ForestBlackBox):
        predicted = bb.predict_class(test_s.features)
        if test_s.labels is not None:
            accuracy = float(np.mean(predicted == test_s.labels))
        channels = (np.full(len(test_s), cfg.class_of_interest, dtype=np.int64)
                    if cfg.class_of_interest is not None else predicted)
    return PreparedRun(cfg, train_s, test_s, scaler, bb, accuracy, channels)


# ---------------------------------------------------------------------------
# Per-example explanation.

def _build_base(prepared: PreparedRun, bb: BlackBox, anchor: Example, tau: float,
                seed: int, n: int) -> Neighborhood:
    cfg = prepared.cfg
    kernel = KernelSpec(tau, prepared.test.dim)
    if cfg.neighborhood_kind == "random":
        return random_perturbation(anchor, n, cfg.sigma, bb, kernel, seed)
    if cfg.neighborhood_kind == "kde":
        return kde_generation(prepared.train, anchor, n, cfg.bandwidth, bb, kernel, seed)
    return exemplar_selection(prepared.train, anchor, n, bb)


def linex_explain(es: EnvironmentSet, K: int, gamma: float | None = None,
                  t: float | None = None, epsilon: float = 1e-6,
                  max_rounds: int = 200, ridge_alt: float | None = None):
    """Full game pipeline for one environment set.

    Sparsify on the base, derive the box bound from per-environment sparse
    fits unless overridden, play the game on the restricted index set, and
    scatter back to full dimension.
    """
    d = es.base.dim
    support = sparsify(es, K, ridge_alt)
    cols = sorted(support)
    if not cols:
        # nothing selectable (flat targets or unreachable weights)
        intercept = (float(es.base.weights @ es.base.targets / es.base.weights.sum())
                     if es.base.weights.sum() > 0 else float(np.mean(es.base.targets)))
        attribution = Attribution(np.zeros(d), intercept, frozenset())
        return attribution, PlayerState(np.zeros((es.k, d)), 0, True, np.zeros(0))
    sub = es if len(support) == d else es.restrict(support)
    if gamma is None:
        try:
            gamma = default_gamma(sub, K)
        except DegenerateGammaError:
            gamma = 1.0
    if t is None:
        t = gamma * max(len(cols), 1)
    cfg = GameConfig(k=es.k, gamma=gamma, t=t, epsilon=epsilon, max_rounds=max_rounds)
    sub_attr, state = play_game(sub, cfg)
    coef = np.zeros(d)
    coef[cols] = sub_attr.coefficients
    attribution = Attribution(coefficients=coef, intercept=sub_attr.intercept,
                              support=support)
    return attribution, state


def explain_one(prepared: PreparedRun, i: int, tau: float, method: str,
                n: int | None = None, k: int | None = None) -> dict:
    """Explain test example i with one method at one kernel width.

    The base neighborhood depends only on (run seed, example index, n), so
    every method and kernel width sees identical samples and the query
    ledgers are directly comparable.
    """
    cfg = prepared.cfg
    n = cfg.n if n is None else n
    k = cfg.k if k is None else k
    anchor = prepared.test.example(i)
    bb = with_cache(prepared.bb_for_example(i))
    base_seed = derive_seed(cfg.seed, i, n)
    base = _build_base(prepared, bb, anchor, tau, base_seed, n)
    blackbox_value = float(bb.predict_batch(anchor.features[None, :])[0])
    lime_cfg = LimeConfig(K=cfg.sparsity, kernel=KernelSpec(tau, prepared.test.dim),
                          ridge_alt=cfg.ridge_alt)
    state = None
    if method == "lime":
        attribution = lime_explain(base, lime_cfg)
    else:
        es = bootstrap_environments(base, k, derive_seed(cfg.seed, i, n, 0xB), anchor)
        if method == "slime":
            attribution = slime_explain(es, lime_cfg)
        else:
            attribution, state = linex_explain(
                es, cfg.sparsity, cfg.gamma, cfg.t, cfg.epsilon, cfg.max_rounds,
                cfg.ridge_alt,
            )
    return {
        "index": i,
        "method": method,
        "tau": tau,
        "attribution": attribution,
        "state": state,
        "blackbox_value": blackbox_value,
        "query_count": bb.ledger.total_queries,
        "cache_hits": bb.ledger.cache_hits,
    }


def _worker_count(cfg: RunConfig) -> int:
    return cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)


def explain_all(prepared: PreparedRun, tau: float, method: str,
                n: int | None = None, k: int | None = None) -> list[dict]:
    """All test examples, worker pool, results in input order."""
    indices = range(len(prepared.test))
    max_workers = _worker_count(prepared.cfg)
    if max_workers == 1:
        return [explain_one(prepared, i, tau, method, n, k) for i in indices]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda i: explain_one(prepared, i, tau, method, n, k), indices))


# ---------------------------------------------------------------------------
# explain subcommand.

def _record_json(rec: dict, feature_names) -> dict:
    att: Attribution = rec["attribution"]
    out = {
        "index": rec["index"],
        "method": rec["method"],
        "tau": rec["tau"],
        "feature_names": list(feature_names),
        "coefficients": [float(v) for v in att.coefficients],
        "intercept": float(att.intercept),
        "support": sorted(att.support),
        "blackbox_value": rec["blackbox_value"],
        "query_count": rec["query_count"],
        "cache_hits": rec["cache_hits"],
        "converged": None,
        "rounds": None,
    }
    if rec["state"] is not None:
        out["converged"] = bool(rec["state"].converged)
        out["rounds"] = int(rec["state"].rounds_used)
    return out


def run_explain(cfg: RunConfig) -> list[dict]:
    prepared = prepare_run(cfg)
    try:
        tau = cfg.single_tau
        records = explain_all(prepared, tau, cfg.method)
        rows = [_record_json(r, prepared.test.feature_names) for r in records]
        os.makedirs(cfg.out, exist_ok=True)
        path = os.path.join(cfg.out, "explanations.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        return rows
    finally:
        prepared.close()


# ---------------------------------------------------------------------------
# benchmark subcommand.

def _explained_set(prepared: PreparedRun, records: list[dict],
                   neighbors: np.ndarray) -> metrics_mod.ExplainedSet:
    return metrics_mod.ExplainedSet(
        features=prepared.test.features,
        attributions=tuple(r["attribution"] for r in records),
        blackbox_values=np.array([r["blackbox_value"] for r in records]),
        neighbors=neighbors,
        task=prepared.cfg.task,
        labels=prepared.test.labels,
    )


def _sem(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def resampled_upsilon(prepared: PreparedRun, tau: float, method: str, resamples: int,
                      n: int | None = None, k: int | None = None) -> np.ndarray:
    """Per-example sign consistency across fresh neighborhood seeds."""
    stacks = []
    for rep in range(resamples):
        cfg = prepared.cfg
        seed = cfg.seed if rep == 0 else derive_seed(cfg.seed, 0xE5A, rep)
        shadow = replace(prepared, cfg=replace(cfg, seed=seed))
        records = explain_all(shadow, tau, method, n, k)
        stacks.append([r["attribution"].coefficients for r in records])
    return np.array([
        metrics_mod.upsilon(np.stack([stack[i] for stack in stacks]))
        for i in range(len(stacks[0]))
    ])


def benchmark_cell(prepared: PreparedRun, method: str, tau: float,
                   n: int | None = None, k: int | None = None) -> dict:
    """One (method, tau) cell: metric values plus per-example breakdowns."""
    records = explain_all(prepared, tau, method, n, k)
    neighbors = metrics_mod.exemplar_neighbors(prepared.test.features,
                                               prepared.cfg.exemplar_k)
    es = _explained_set(prepared, records, neighbors)
    report = metrics_mod.compute_report(es)
    cell = {
        "metrics": {"infd": report.infd, "gi": report.gi, "ci": report.ci,
                    "upsilon": report.upsilon},
        "per_example": report.per_example,
        "per_class_cac": None,
        "query_counts": [r["query_count"] for r in records],
        "non_converged": sum(
            1 for r in records if r["state"] is not None and not r["state"].converged
        ),
    }
    if report.cac is not None:
        cell["metrics"]["cac"] = report.cac
        per_class, _ = metrics_mod.cac_per_class(es)
        cell["per_class_cac"] = per_class
    if prepared.cfg.upsilon_resamples > 1:
        pe = resampled_upsilon(prepared, tau, method, prepared.cfg.upsilon_resamples, n, k)
        cell["metrics"]["upsilon_resampled"] = float(np.mean(pe))
        cell["per_example"]["upsilon_resampled"] = pe
    return cell


def _paired_p(a: np.ndarray, b: np.ndarray) -> float | None:
    try:
        return metrics_mod.paired_t_test(a, b)
    except DegenerateVarianceError:
        return None


def run_benchmark(cfg: RunConfig) -> dict:
    started = time.time()
    prepared = prepare_run(cfg)
    try:
        metric_names = ["infd", "gi", "ci", "upsilon"]
        if cfg.upsilon_resamples > 1:
            metric_names.append("upsilon_resampled")
        with_cac = cfg.task == CLASSIFICATION and prepared.test.labels is not None
        if with_cac:
            metric_names.append("cac")
        cells: dict[str, dict[float, dict]] = {m: {} for m in cfg.methods}
        for method in cfg.methods:
            for tau in cfg.tau_grid:
                cells[method][tau] = benchmark_cell(prepared, method, tau)

        methods_report = {}
        for method in cfg.methods:
            per_tau = {str(tau): cells[method][tau]["metrics"] for tau in cfg.tau_grid}
            aggregate = {}
            for name in metric_names:
                vals = np.array([cells[method][tau]["metrics"][name] for tau in cfg.tau_grid])
                aggregate[name] = {"mean": float(np.mean(vals)), "sem": _sem(vals)}
            methods_report[method] = {
                "per_tau": per_tau,
                "aggregate": aggregate,
                "non_converged": int(sum(cells[method][tau]["non_converged"]
                                         for tau in cfg.tau_grid)),
            }

        # pairing: per (example, tau) where per-example breakdowns exist,
        # per (class, tau) for cac
        p_values: dict[str, dict[str, float | None]] = {}
        baselines_present = [m for m in cfg.methods if m != "linex"]
        if "linex" in cfg.methods and baselines_present:
            per_example_names = [m for m in metric_names if m != "cac"]
            for baseline in baselines_present:
                entry = {}
                for name in per_example_names:
                    a = np.concatenate([cells["linex"][tau]["per_example"][name]
                                        for tau in cfg.tau_grid])
                    b = np.concatenate([cells[baseline][tau]["per_example"][name]
                                        for tau in cfg.tau_grid])
                    entry[name] = _paired_p(a, b)
                if with_cac:
                    a, b = [], []
                    for tau in cfg.tau_grid:
                        ca = cells["linex"][tau]["per_class_cac"]
                        cb = cells[baseline][tau]["per_class_cac"]
                        for cls in sorted(set(ca) & set(cb)):
                            a.append(ca[cls])
                            b.append(cb[cls])
                    entry["cac"] = _paired_p(np.array(a), np.array(b)) if len(a) >= 2 else None
                p_values[f"linex_vs_{baseline}"] = entry

        query_parity = None
        if "linex" in cfg.methods and "lime" in cfg.methods:
            query_parity = all(
                cells["linex"][tau]["query_counts"] == cells["lime"][tau]["query_counts"]
                for tau in cfg.tau_grid
            )

        report = {
            "header": {
                # volatile fields live here only, so reports are comparable
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
                "runtime_seconds": round(time.time() - started, 3),
                "config": cfg.to_dict(),
            },
            "blackbox": {"kind": cfg.blackbox["kind"], "test_accuracy": prepared.test_accuracy},
            "methods": methods_report,
            "p_values": p_values,
            "query_parity": query_parity,
            "per_example_ci": {
                method: {str(tau): [float(v) for v in cells[method][tau]["per_example"]["ci"]]
                         for tau in cfg.tau_grid}
                for method in cfg.methods
            },
        }

        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
        with open(os.path.join(cfg.out, "metrics.csv"), "w", encoding="utf-8",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "tau"] + metric_names)
            for method in cfg.methods:
                for tau in cfg.tau_grid:
                    row = [method, repr(float(tau))]
                    row += [repr(float(cells[method][tau]["metrics"][m])) for m in metric_names]
                    writer.writerow(row)
        return report
    finally:
        prepared.close()


# ---------------------------------------------------------------------------
# sweep subcommand.

SWEEP_AXES = ("n", "k", "tau")


def run_sweep(cfg: RunConfig, axis: str) -> list[dict]:
    """Ablation along one axis, averaging over the grids of the other two."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    prepared = prepare_run(cfg)
    try:
        grids = {"n": cfg.n_grid, "k": cfg.k_grid, "tau": cfg.tau_grid}
        rows: list[dict] = []
        for value in grids[axis]:
            others = [a for a in SWEEP_AXES if a != axis]
            combos = [(x, y) for x in grids[others[0]] for y in grids[others[1]]]
            per_metric: dict[str, dict[str, list[float]]] = {}
            for x, y in combos:
                cell_kwargs = {axis: value, others[0]: x, others[1]: y}
                for method in cfg.methods:
                    cell = benchmark_cell(
                        prepared, method, float(cell_kwargs["tau"]),
                        n=int(cell_kwargs["n"]), k=int(cell_kwargs["k"]),
                    )
                    for name, metric_value in cell["metrics"].items():
                        per_metric.setdefault(method, {}).setdefault(name, []).append(metric_value)
            for method, by_name in per_metric.items():
                for name, values in by_name.items():
                    arr = np.asarray(values)
                    rows.append({
                        "method": method,
                        "axis": axis,
                        "value": float(value),
                        "metric": name,
                        "mean": float(np.mean(arr)),
                        "sem": _sem(arr),
                    })
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "sweep.csv"), "w", encoding="utf-8",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "axis", "value", "metric", "mean", "sem"])
            for row in rows:
                writer.writerow([row["method"], row["axis"], repr(row["value"]),
                                 row["metric"], repr(row["mean"]), repr(row["sem"])])
        return rows
    finally:
        prepared.close()


# ---------------------------------------------------------------------------
# oracle-check subcommand.

def _orthogonal_design(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Exactly mean-zero, mutually orthogonal columns (independence enforced
    empirically), scaled to unit-ish variance."""
    m = np.column_stack([np.ones(n), rng.standard_normal((n, d))])
    q, _ = np.linalg.qr(m)
    return q[:, 1:d + 1] * np.sqrt(n)


def _classify_regime(w_stars: np.ndarray, gamma: float) -> np.ndarray:
    """Per coordinate: 'opposite', 'same' (both magnitudes below gamma), or
    'excluded' (same-sign with a magnitude at or above gamma, where the
    closed-form rule does not apply)."""
    k, d = w_stars.shape
    out = np.empty(d, dtype=object)
    S = np.sort(w_stars, axis=0)
    if k % 2 == 1:
        med = S[k // 2]
        for j in range(d):
            out[j] = "median" if abs(med[j]) < gamma else "excluded"
        return out
    m1, m2 = S[k // 2 - 1], S[k // 2]
    for j in range(d):
        if m1[j] * m2[j] < 0:
            out[j] = "opposite"
        elif max(abs(m1[j]), abs(m2[j])) < gamma:
            out[j] = "same"
        else:
            out[j] = "excluded"
    return out


def run_oracle_check(dims: int, trials: int, seed: int, ks=(2, 3, 4, 5),
                     gamma: float = 1.0, n: int = 60, mag_low: float = 0.05,
                     mag_high: float = 0.9, tol: float = 1e-3,
                     epsilon: float = 1e-7, max_rounds: int = 5000) -> dict:
    """Random two-linear-function (and k-function) environments under exact
    coordinate independence; compares the played game against the
    closed-form equilibrium rules coordinate by coordinate."""
    report: dict = {"dims": dims, "trials": trials, "tolerance": tol, "per_k": {},
                    "max_deviation": 0.0, "passed": True, "warning": None}
    if trials == 0:
        report["warning"] = "zero trials requested; vacuous pass"
        return report
    rng = rng_from(derive_seed(seed, 0x0C))
    for k in ks:
        devs: list[float] = []
        branch_counts = {"opposite": 0, "same": 0, "median": 0, "excluded": 0}
        max_dev = 0.0
        for _ in range(trials):
            envs = []
            w_stars = np.empty((k, dims))
            for i in range(k):
                X = _orthogonal_design(n, dims, rng)
                w_stars[i] = rng.uniform(mag_low, mag_high, dims) * rng.choice([-1.0, 1.0], dims)
                envs.append(Neighborhood(X, X @ w_stars[i], np.ones(n)))
            es = EnvironmentSet(envs[0], tuple(envs), Example(np.zeros(dims)))
            cfg = GameConfig(k=k, gamma=gamma, t=gamma * dims, epsilon=epsilon,
                             max_rounds=max_rounds, inner_max_iters=300, inner_tol=1e-10)
            attribution, _ = play_game(es, cfg)
            lsq = [weighted_lsq(env) for env in envs]
            if k == 2:
                oracle = ne_oracle_two(lsq[0], lsq[1], gamma)
            else:
                oracle = ne_oracle_multi(lsq, gamma)
            regimes = _classify_regime(w_stars, gamma)
            for j in range(dims):
                branch_counts[regimes[j]] += 1
                if regimes[j] == "excluded":
                    continue
                dev = float(abs(attribution.coefficients[j] - oracle[j]))
                devs.append(dev)
                max_dev = max(max_dev, dev)
        report["per_k"][int(k)] = {
            "max_deviation": max_dev,
            "branch_counts": branch_counts,
            "checked_coordinates": len(devs),
        }
        report["max_deviation"] = max(report["max_deviation"], max_dev)
    report["passed"] = report["max_deviation"] <= tol
    return report
