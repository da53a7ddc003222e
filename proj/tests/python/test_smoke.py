import json
import os
import sys
from itertools import product

import numpy as np
import pytest

import tabctx

FIXTURES = os.environ.get("TABCTX_FIXTURE_DIR", os.path.join(os.path.dirname(__file__), "..", "fixtures"))


def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    credit = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in product(pos, neg))
    return credit / (len(pos) * len(neg))


def test_auc_matches_all_pairs():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 60))
        s = rng.integers(0, 5, n) / 4.0
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        assert tabctx.roc_auc(s.tolist(), y.tolist()) == pytest.approx(brute_auc(s, y), abs=1e-12)


def test_single_class_auc_raises():
    with pytest.raises(tabctx.UndefinedMetricError):
        tabctx.roc_auc([0.1, 0.2], [0, 0])


def test_mcc_degenerate_and_perfect():
    assert tabctx.mcc(0, 0, 10, 90) == 0.0
    assert tabctx.mcc(10, 0, 0, 90) == pytest.approx(1.0)


def test_synth_and_sampling():
    X, y, names = tabctx.synth(n=2000, minority_rate=0.05, noise_dims=2, seed=1)
    assert X.shape == (2000, 4)
    assert sum(y) == 100
    assert names[:2] == ["x0", "x1"]

    w = tabctx.sample_context(X, y, "balanced", 64, seed=3)
    assert (w["n0"], w["n1"]) == (32, 32)
    assert len(set(w["row_ids"])) == 64

    s = tabctx.sample_context(X, y, "smote", 100, seed=3)
    assert s["n1"] == 50
    assert s["synthetic_encoded"].shape[0] == sum(s["synthetic"])

    h = tabctx.sample_context(X, y, json.dumps({"name": "hybrid", "rho": 1.0}), 40, seed=9)
    b = tabctx.sample_context(X, y, "balanced", 40, seed=9)
    assert h["row_ids"] == b["row_ids"]

    with pytest.raises(tabctx.BudgetError):
        tabctx.sample_context(X, y, "uniform", 5000, seed=0)
    assert "diversity_km" in tabctx.strategy_names()


def test_predictors_and_zero_recall_pattern():
    X, y, _ = tabctx.synth(n=6000, minority_rate=0.05, seed=2)
    y = np.asarray(y)
    test = np.arange(4500, 6000)
    Xp, yp = X[:4500], y[:4500]
    out = {}
    for strategy in ("uniform", "balanced"):
        w = tabctx.sample_context(Xp, yp.tolist(), strategy, 512, seed=4)
        idx = np.asarray(w["row_ids"])
        p = tabctx.predict_proba("knn", Xp[idx], yp[idx].tolist(), X[test])
        out[strategy] = tabctx.metrics(p, y[test].tolist())
    assert out["uniform"]["default_recall"] < out["balanced"]["default_recall"]
    assert out["balanced"]["default_recall"] > 0.5

    p = tabctx.predict_proba(json.dumps({"kind": "logistic", "l2": 0.1}), Xp[:200], yp[:200].tolist(), X[test])
    assert all(0.0 <= v <= 1.0 for v in p)


def test_feature_selection():
    rng = np.random.default_rng(5)
    a = rng.normal(size=300)
    X = np.column_stack([a, a * 2.0, rng.normal(size=300)])
    y = (a + 0.3 * rng.normal(size=300) > 1.0).astype(int).tolist()
    report = tabctx.select_features(X, y, ["a", "a2", "noise"])
    assert [s["name"] for s in report["stages"]][:3] == ["correlation", "mutual_information", "vif"]
    assert len(report["stages"][0]["dropped"]) == 1
    assert tabctx.mutual_information([1, 1, 2, 2], [1, 1, 0, 0], 2) == 1.0
    v = tabctx.variance_inflation_factors(rng.normal(size=(200, 3)))
    assert all(1.0 <= x < 1.2 for x in v)


def test_plan_run_and_report(tmp_path):
    config = {
        "plan": {
            "seed": 1,
            "repeats": 2,
            "budgets": [32],
            "strategies": ["uniform", "balanced"],
            "predictors": [
                "knn",
                {
                    "kind": "external",
                    "name": "echo",
                    "command": f"{sys.executable} {os.path.join(FIXTURES, 'echo_backend.py')}",
                },
            ],
            "datasets": [{"name": "s", "synthetic": {"n": 500, "minority_rate": 0.1, "seed": 2}}],
            "store": "results.jsonl",
        }
    }
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(config))
    summary = tabctx.run_plan(str(path), workers=2)
    assert summary["executed"] == 8 and summary["failed"] == 0
    records = tabctx.read_store(summary["store"])
    assert len(records) == 8
    assert {r["predictor_version"] for r in records if r["predictor"] == "echo"} == {"echo-frequency 1.0"}
    again = tabctx.run_plan(str(path), resume=True)
    assert again["executed"] == 0
    text = tabctx.report(summary["store"], "win-rates")
    assert "coverage" in text
    with pytest.raises(tabctx.ConfigError):
        tabctx.run_plan(str(path))
