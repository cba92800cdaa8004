"""Metrics and reporting: confusion matrices, weighted F1, cross-seed aggregation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import taxonomy
from .taxonomy import ClassLabel

# Reserved prediction value for zero-shot responses that failed parsing.
# It occupies an extra confusion-matrix column and never matches truth.
UNPARSEABLE = "UNPARSEABLE"

Prediction = Union[ClassLabel, str]


class EvaluationError(Exception):
    pass


@dataclass
class EvalReport:
    confusion: np.ndarray
    per_class_f1: dict[str, float]
    weighted_f1: float
    n: int


@dataclass
class RunAggregate:
    per_class: dict[str, tuple[float, float]]
    weighted: tuple[float, float]
    seeds: list[int]

    @staticmethod
    def format_cell(mean: float, std: float) -> str:
        """Percent-scale "mm.mm±s.ss" cell."""
        return f"{100 * mean:.2f}±{100 * std:.2f}"


def _pred_index(pred: Prediction) -> int:
    if isinstance(pred, ClassLabel):
        return taxonomy.index_of(pred)
    if pred == UNPARSEABLE:
        return taxonomy.NUM_CLASSES
    raise EvaluationError(f"unknown prediction value {pred!r}")


def confusion_matrix(truth: Sequence[ClassLabel], pred: Sequence[Prediction]) -> np.ndarray:
    """Count matrix with rows=true class, cols=predicted, both in A-M order.

    A 14th column is appended only when some prediction is UNPARSEABLE.
    """
    if len(truth) != len(pred):
        raise EvaluationError(f"length mismatch: {len(truth)} vs {len(pred)}")
    k = taxonomy.NUM_CLASSES
    has_unparseable = any(not isinstance(p, ClassLabel) for p in pred)
    mat = np.zeros((k, k + 1 if has_unparseable else k), dtype=np.int64)
    for t, p in zip(truth, pred):
        mat[taxonomy.index_of(t), _pred_index(p)] += 1
    return mat


def per_class_f1(truth: Sequence[ClassLabel], pred: Sequence[Prediction]) -> dict[str, float]:
    """F1 = 2PR/(P+R) per class, 0 when the class is never predicted or present."""
    if len(truth) != len(pred):
        raise EvaluationError(f"length mismatch: {len(truth)} vs {len(pred)}")
    scores: dict[str, float] = {}
    for label in taxonomy.canonical_order():
        tp = sum(1 for t, p in zip(truth, pred)
                 if t.name == label.name and isinstance(p, ClassLabel) and p.name == label.name)
        fp = sum(1 for t, p in zip(truth, pred)
                 if t.name != label.name and isinstance(p, ClassLabel) and p.name == label.name)
        fn = sum(1 for t, p in zip(truth, pred)
                 if t.name == label.name and (not isinstance(p, ClassLabel) or p.name != label.name))
        denom = 2 * tp + fp + fn
        scores[label.name] = (2 * tp / denom) if denom else 0.0
    return scores


def weighted_f1(truth: Sequence[ClassLabel], pred: Sequence[Prediction]) -> float:
    """Per-class F1 averaged with true-class support weights."""
    if not truth:
        raise EvaluationError("empty input")
    f1 = per_class_f1(truth, pred)
    n = len(truth)
    support = {label.name: sum(1 for t in truth if t.name == label.name)
               for label in taxonomy.canonical_order()}
    return sum(support[name] * f1[name] for name in f1) / n


def evaluate(truth: Sequence[ClassLabel], pred: Sequence[Prediction]) -> EvalReport:
    return EvalReport(
        confusion=confusion_matrix(truth, pred),
        per_class_f1=per_class_f1(truth, pred),
        weighted_f1=weighted_f1(truth, pred),
        n=len(truth),
    )


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    if all(v == values[0] for v in values):
        return values[0], 0.0
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def aggregate_runs(reports: Sequence[EvalReport], seeds: Sequence[int]) -> RunAggregate:
    """Cross-seed mean and population standard deviation of every F1."""
    if not reports:
        raise EvaluationError("no reports to aggregate")
    per_class = {
        name: _mean_std([r.per_class_f1[name] for r in reports])
        for name in reports[0].per_class_f1
    }
    weighted = _mean_std([r.weighted_f1 for r in reports])
    return RunAggregate(per_class=per_class, weighted=weighted, seeds=list(seeds))


def save_report(report: EvalReport, path: str | Path) -> None:
    payload = {
        "n": report.n,
        "weighted_f1": report.weighted_f1,
        "per_class_f1": report.per_class_f1,
        "confusion": report.confusion.tolist(),
        "confusion_axis": [c.name for c in taxonomy.canonical_order()],
    }
    if report.confusion.shape[1] == taxonomy.NUM_CLASSES + 1:
        payload["confusion_extra_column"] = UNPARSEABLE
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def save_aggregate(agg: RunAggregate, path: str | Path) -> None:
    payload = {
        "seeds": agg.seeds,
        "std_estimator": "population",
        "per_class": {
            name: {"mean": m, "std": s, "cell": RunAggregate.format_cell(m, s)}
            for name, (m, s) in agg.per_class.items()
        },
        "weighted": {
            "mean": agg.weighted[0],
            "std": agg.weighted[1],
            "cell": RunAggregate.format_cell(*agg.weighted),
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
