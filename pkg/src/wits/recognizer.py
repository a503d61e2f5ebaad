"""Per-class reconstruction scoring: activity labels and abnormality flags.

A sample is coded against every class's dictionaries; its score per class is
the learned objective restricted to that sample. The minimizing class wins,
and the winning score doubles as a normality measure: samples the model
cannot reconstruct cheaply anywhere are flagged abnormal against a threshold
calibrated from training scores.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .mtdl import Model, _solve_codes

SCORING_MODES = ("objective", "no_shared", "residual")


@dataclass(frozen=True)
class ActivityLabel:
    id: int      # 1-based class id
    name: str


@dataclass
class RecognitionResult:
    label: ActivityLabel
    scores: np.ndarray   # one per class, ordered by class id
    normality: float
    abnormal: bool
    epsilon: float


def model_labels(model: Model) -> list[ActivityLabel]:
    names = model.label_names or [f"class{k}" for k in range(1, model.n_tasks + 1)]
    return [ActivityLabel(k + 1, name) for k, name in enumerate(names)]


def _code_rows_independently(x, model: Model, lambda3):
    """Code each row against every class; rows never couple (no graph term)."""
    per_class = []
    for d_k in model.task_dicts:
        per_class.append(_solve_codes(x, d_k, model.shared, model.projection,
                                      lap=None, hyper=model.hyper, lambda3=lambda3))
    return per_class


def classify(x, model: Model, epsilon: float = math.inf,
             scoring: str = "objective"):
    """Assign each sample the class with the cheapest reconstruction.

    scores[k-1] for class k is, per the active mode:
      objective  -- ||x - c D_k||^2 + l1*||c||_1 + l3*||x Q - c D||^2
      no_shared  -- ||x - c D_k||^2 + l1*||c||_1, with c coded ignoring the
                    shared term (for models whose projection came from other
                    subjects)
      residual   -- raw ||x - c D_k||^2 of the full coding (ablation)

    Ties go to the smallest class id. ``normality`` is always the full
    objective of the assigned class, and ``abnormal`` is normality > epsilon.
    Accepts one feature vector (returns one result) or a matrix (returns a
    list, rows scored independently).
    """
    if scoring not in SCORING_MODES:
        raise InvalidInputError(f"scoring must be one of {SCORING_MODES}")
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.m:
        raise InvalidInputError(f"expected {model.m} features, got {arr.shape[1]}")

    h = model.hyper
    coding_l3 = 0.0 if scoring == "no_shared" else h.lambda3
    per_class_codes = _code_rows_independently(arr, model, coding_l3)

    n, k_classes = arr.shape[0], model.n_tasks
    mode_scores = np.empty((n, k_classes))
    full_scores = np.empty((n, k_classes))
    x_proj = arr @ model.projection
    for k, codes in enumerate(per_class_codes):
        residual = np.sum((arr - codes @ model.task_dicts[k]) ** 2, axis=1)
        l1_term = h.lambda1 * np.abs(codes).sum(axis=1)
        shared = h.lambda3 * np.sum((x_proj - codes @ model.shared) ** 2, axis=1)
        full_scores[:, k] = residual + l1_term + shared
        if scoring == "objective":
            mode_scores[:, k] = full_scores[:, k]
        elif scoring == "no_shared":
            mode_scores[:, k] = residual + l1_term
        else:
            mode_scores[:, k] = residual

    labels = model_labels(model)
    results = []
    for i in range(n):
        winner = int(np.argmin(mode_scores[i]))   # argmin takes the smallest id on ties
        normality = float(full_scores[i, winner])
        results.append(RecognitionResult(
            label=labels[winner],
            scores=mode_scores[i].copy(),
            normality=normality,
            abnormal=normality > epsilon,
            epsilon=float(epsilon),
        ))
    return results[0] if single else results


def score_normality(x, label_id: int, model: Model) -> float:
    """Full objective of one sample restricted to class ``label_id`` (1-based)."""
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    if arr.shape[0] != 1:
        raise InvalidInputError("score_normality takes a single sample")
    if not 1 <= label_id <= model.n_tasks:
        raise InvalidInputError(f"label id {label_id} out of range [1, {model.n_tasks}]")
    if arr.shape[1] != model.m:
        raise InvalidInputError(f"expected {model.m} features, got {arr.shape[1]}")
    h = model.hyper
    codes = _solve_codes(arr, model.task_dicts[label_id - 1], model.shared,
                         model.projection, lap=None, hyper=h)
    residual = float(np.sum((arr - codes @ model.task_dicts[label_id - 1]) ** 2))
    l1_term = h.lambda1 * float(np.abs(codes).sum())
    shared = h.lambda3 * float(
        np.sum((arr @ model.projection - codes @ model.shared) ** 2))
    return residual + l1_term + shared


def detect_abnormal(x, model: Model, epsilon: float):
    """True where the sample's normality score exceeds ``epsilon``."""
    result = classify(x, model, epsilon=epsilon)
    if isinstance(result, RecognitionResult):
        return result.abnormal
    return [r.abnormal for r in result]


def calibrate_threshold(training_scores, quantile: float = 0.99) -> float:
    """Nearest-rank empirical quantile of the training normality scores."""
    scores = list(training_scores)
    if not scores:
        raise InvalidInputError("cannot calibrate a threshold from no scores")
    if not 0 < quantile <= 1:
        raise InvalidInputError("quantile must lie in (0, 1]")
    ordered = sorted(scores)
    rank = max(int(math.ceil(quantile * len(ordered))), 1)
    return float(ordered[rank - 1])


def knn_baseline(train_features, train_label_ids, test_features, k: int) -> np.ndarray:
    """Euclidean k-nearest-neighbor majority vote (reference baseline).

    Distance ties resolve toward earlier training rows, vote ties toward the
    smallest label id; both make the output deterministic.
    """
    train = np.atleast_2d(np.asarray(train_features, dtype=float))
    test = np.atleast_2d(np.asarray(test_features, dtype=float))
    ids = np.asarray(train_label_ids, dtype=int)
    if train.shape[0] == 0:
        raise InvalidInputError("empty training set")
    if ids.shape[0] != train.shape[0]:
        raise InvalidInputError("one label per training row required")
    if not 1 <= k <= train.shape[0]:
        raise InvalidInputError(f"k must lie in [1, {train.shape[0]}]")

    d2 = (np.sum(test**2, axis=1)[:, None] - 2.0 * test @ train.T
          + np.sum(train**2, axis=1)[None, :])
    out = np.empty(test.shape[0], dtype=int)
    n_ids = int(ids.max()) + 1
    for i in range(test.shape[0]):
        nearest = np.argsort(d2[i], kind="stable")[:k]
        counts = np.bincount(ids[nearest], minlength=n_ids)
        out[i] = int(np.argmax(counts))   # smallest label id wins ties
    return out


# ---------------------------------------------------------------------------
# Result records
# ---------------------------------------------------------------------------

def results_to_records(results, spans) -> list[dict]:
    records = []
    for (start_ms, end_ms), r in zip(spans, results):
        records.append({
            "start_ms": int(start_ms),
            "end_ms": int(end_ms),
            "label": r.label.name,
            "label_id": r.label.id,
            "scores": [float(s) for s in r.scores],
            "normality": r.normality,
            "abnormal": bool(r.abnormal),
        })
    return records


def write_results_jsonl(path, results, spans) -> None:
    with open(path, "w") as fh:
        for rec in results_to_records(results, spans):
            fh.write(json.dumps(rec) + "\n")


def read_results_jsonl(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
