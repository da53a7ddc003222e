"""Context-window construction and benchmarking for in-context tabular classifiers."""

import json

from ._core import (
    BudgetError,
    ConfigError,
    Error,
    LeakageError,
    UndefinedMetricError,
    derive_seed,
    mcc,
    metrics,
    mutual_information,
    predict_proba,
    report,
    roc_auc,
    run_plan,
    sample_context,
    strategy_names,
    synth,
    variance_inflation_factors,
)
from . import _core

__all__ = [
    "BudgetError",
    "ConfigError",
    "Error",
    "LeakageError",
    "UndefinedMetricError",
    "derive_seed",
    "mcc",
    "metrics",
    "mutual_information",
    "predict_proba",
    "read_store",
    "report",
    "roc_auc",
    "run_plan",
    "sample_context",
    "select_features",
    "strategy_names",
    "synth",
    "variance_inflation_factors",
]


def select_features(X, y, names=(), keep_top_k=None, seed=0):
    """Correlation, MI, VIF and (optionally) importance stages; returns the report as a dict."""
    return json.loads(_core.select_features(X, y, list(names), keep_top_k, seed))


def read_store(path):
    """Records of a JSONL results store as dicts (a torn trailing line is ignored)."""
    return json.loads(_core.read_store_json(str(path)))
