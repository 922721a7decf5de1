import json
import os

import numpy as np
import pytest

from linex.errors import ConfigError
from linex.runner import (
    RunConfig,
    benchmark_cell,
    explain_all,
    prepare_run,
    run_benchmark,
    run_explain,
    run_oracle_check,
    run_sweep,
)


def iris_cfg(iris_path, out, **overrides):
    raw = {
        "dataset_path": iris_path,
        "task": "classification",
        "label_column": "species",
        "blackbox": {"kind": "forest", "trees": 30, "max_depth": 6},
        "class_of_interest": 0,
        "neighborhood_kind": "random",
        "n": 10,
        "k": 2,
        "tau": 0.25,
        "tau_grid": [0.1, 0.25],
        "sparsity": 5,
        "exemplar_k": 3,
        "seed": 7,
        "out": out,
        "workers": 2,
    }
    raw.update(overrides)
    return RunConfig.from_dict(raw)


class TestConfig:
    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"no_such_field": 1})

    def test_bad_method(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"method": "shap"})

    def test_bad_blackbox_kind(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"blackbox": {"kind": "oracle"}})

    def test_bad_tau(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"tau_grid": [0.1, -0.2]})

    def test_version_check(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"version": 99})

    def test_round_trip(self):
        cfg = RunConfig.from_dict({"n": 20, "k": 3})
        again = RunConfig.from_dict(cfg.to_dict())
        assert again == cfg


class TestExplain:
    def test_record_schema_and_budget(self, iris_path, tmp_path):
        cfg = iris_cfg(iris_path, str(tmp_path / "run"))
        rows = run_explain(cfg)
        assert len(rows) == 30  # 20% split of 150
        for row in rows:
            assert len(row["support"]) <= 5
            assert len(row["coefficients"]) == 4
            assert row["feature_names"][0] == "sepal_length"
            assert row["query_count"] == 11  # n samples + the anchor
            assert row["converged"] in (True, False)
        path = tmp_path / "run" / "explanations.jsonl"
        assert path.exists()
        assert len(path.read_text().splitlines()) == 30

    def test_deterministic_outputs(self, iris_path, tmp_path):
        cfg1 = iris_cfg(iris_path, str(tmp_path / "a"))
        cfg2 = iris_cfg(iris_path, str(tmp_path / "b"))
        run_explain(cfg1)
        run_explain(cfg2)
        a = (tmp_path / "a" / "explanations.jsonl").read_bytes()
        b = (tmp_path / "b" / "explanations.jsonl").read_bytes()
        assert a == b

    def test_query_parity_per_example(self, iris_path, tmp_path):
        prepared = prepare_run(iris_cfg(iris_path, str(tmp_path / "p")))
        linex_records = explain_all(prepared, 0.25, "linex")
        lime_records = explain_all(prepared, 0.25, "lime")
        slime_records = explain_all(prepared, 0.25, "slime")
        for a, b, c in zip(linex_records, lime_records, slime_records):
            assert a["query_count"] == b["query_count"] == c["query_count"]


class TestBenchmark:
    def test_report_structure(self, iris_path, tmp_path):
        cfg = iris_cfg(iris_path, str(tmp_path / "bench"),
                       methods=["linex", "lime"], tau_grid=[0.1, 0.25])
        report = run_benchmark(cfg)
        assert report["query_parity"] is True
        assert set(report["methods"]) == {"linex", "lime"}
        agg = report["methods"]["linex"]["aggregate"]
        assert set(agg) == {"infd", "gi", "ci", "upsilon", "cac"}
        assert "linex_vs_lime" in report["p_values"]
        csv_path = tmp_path / "bench" / "metrics.csv"
        header = csv_path.read_text().splitlines()[0]
        assert header == "method,tau,infd,gi,ci,upsilon,cac"
        # deterministic apart from the header
        cfg2 = iris_cfg(iris_path, str(tmp_path / "bench2"),
                        methods=["linex", "lime"], tau_grid=[0.1, 0.25])
        report2 = run_benchmark(cfg2)
        report.pop("header"), report2.pop("header")
        assert json.dumps(report, sort_keys=True) == json.dumps(report2, sort_keys=True)

    def test_regression_has_no_cac_column(self, regression_csv, tmp_path):
        cfg = RunConfig.from_dict({
            "dataset_path": regression_csv,
            "task": "regression",
            "label_column": "target",
            "blackbox": {"kind": "forest", "trees": 30, "max_depth": 6},
            "methods": ["linex", "lime"],
            "tau_grid": [0.25],
            "n": 10, "k": 2, "sparsity": 3, "exemplar_k": 3,
            "seed": 3, "out": str(tmp_path / "reg"), "workers": 2,
        })
        report = run_benchmark(cfg)
        assert "cac" not in report["methods"]["linex"]["aggregate"]
        header = (tmp_path / "reg" / "metrics.csv").read_text().splitlines()[0]
        assert header == "method,tau,infd,gi,ci,upsilon"
        assert "cac" not in report["p_values"]["linex_vs_lime"]

    def test_single_method_has_no_t_tests(self, iris_path, tmp_path):
        cfg = iris_cfg(iris_path, str(tmp_path / "solo"),
                       methods=["lime"], tau_grid=[0.25])
        report = run_benchmark(cfg)
        assert report["p_values"] == {}
        assert report["query_parity"] is None

    def test_upsilon_resampled_metric(self, iris_path, tmp_path):
        cfg = iris_cfg(iris_path, str(tmp_path / "ur"),
                       methods=["lime"], tau_grid=[0.25], upsilon_resamples=3)
        report = run_benchmark(cfg)
        agg = report["methods"]["lime"]["aggregate"]
        assert "upsilon_resampled" in agg
        assert 0.0 <= agg["upsilon_resampled"]["mean"] <= 1.0


class TestSweep:
    def test_single_point_grid_matches_benchmark(self, iris_path, tmp_path):
        cfg = iris_cfg(iris_path, str(tmp_path / "sweep"),
                       methods=["lime"], tau_grid=[0.25], n_grid=[10], k_grid=[2])
        prepared = prepare_run(cfg)
        cell = benchmark_cell(prepared, "lime", 0.25)
        rows = run_sweep(cfg, "tau")
        assert {r["metric"] for r in rows} == set(cell["metrics"])
        for row in rows:
            assert row["mean"] == pytest.approx(cell["metrics"][row["metric"]], abs=1e-12)
            assert row["sem"] == 0.0
        assert (tmp_path / "sweep" / "sweep.csv").exists()

    def test_axis_rows(self, iris_path, tmp_path):
        cfg = iris_cfg(iris_path, str(tmp_path / "sweep2"),
                       methods=["lime"], tau_grid=[0.25], n_grid=[8, 10], k_grid=[2])
        rows = run_sweep(cfg, "n")
        values = {r["value"] for r in rows}
        assert values == {8.0, 10.0}

    def test_bad_axis(self, iris_path, tmp_path):
        cfg = iris_cfg(iris_path, str(tmp_path / "sweep3"))
        with pytest.raises(ConfigError):
            run_sweep(cfg, "sigma")


class TestOracleCheckRunner:
    def test_zero_trials_vacuous(self):
        report = run_oracle_check(3, 0, seed=1)
        assert report["passed"] is True
        assert report["warning"]

    def test_small_run_passes(self):
        report = run_oracle_check(2, 10, seed=5, ks=(2, 3))
        assert report["passed"] is True
        assert report["max_deviation"] <= 1e-3
        counts = report["per_k"][2]["branch_counts"]
        assert counts["opposite"] + counts["same"] == 20

    def test_out_of_regime_excluded(self):
        # magnitudes above gamma exercise the regime classifier
        report = run_oracle_check(3, 12, seed=9, ks=(2,), mag_low=0.5, mag_high=1.6)
        counts = report["per_k"][2]["branch_counts"]
        assert counts["excluded"] > 0
        assert report["per_k"][2]["checked_coordinates"] < 12 * 3
        assert report["passed"] is True  # in-regime coordinates still agree


def test_subprocess_blackbox_round_trip(iris_path, tmp_path):
    import sys
    child = (
        "import json,sys\n"
        "for line in sys.stdin:\n"
        "    req=json.loads(line)\n"
        "    if req['op']=='meta': print(json.dumps({'d':4,'task':'regression'}),flush=True)\n"
        "    else: print(json.dumps({'id':req['id'],'y':[sum(x) for x in req['x']]}),flush=True)\n"
    )
    cfg = iris_cfg(iris_path, str(tmp_path / "sub"),
                   blackbox={"kind": "subprocess",
                             "command": [sys.executable, "-c", child]},
                   task="classification")
    rows = run_explain(cfg)
    assert len(rows) == 30
