"""Cross-validation, grid search and the metric-learner + k-NN pipeline.

Three task shapes are supported: supervised (labeled points, scored through
a downstream k-NN classifier in the learned space), pairs (labeled pairs,
threshold auto-calibrated on each training fold unless scoring by ROC-AUC)
and quadruplets (scored as the fraction of held-out quadruplets predicted in
the right order). Weak tasks split by tuple index, so the same underlying
point may appear on both sides of a fold boundary.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ValidationError
from .rng import SplitMix64
from .scoring import score
from .tuples import validate_tuples


@dataclass
class SupervisedTask:
    """Metric learner + k-NN classification over labeled points."""
    x: np.ndarray
    y: np.ndarray
    estimator: object
    knn_k: int = 3


@dataclass
class PairsTask:
    pairs: np.ndarray
    y: np.ndarray
    estimator: object


@dataclass
class QuadrupletsTask:
    quads: np.ndarray
    estimator: object


@dataclass
class CvResult:
    test_scores: list
    train_scores: list
    mean: float
    std: float
    folds: list = field(default_factory=list)
    fold_models: list = field(default_factory=list)


def kfold_split(n: int, k: int, seed: int, stratify_labels=None):
    """k disjoint, seed-shuffled folds of 0..n-1; returns (train, test) pairs.

    With stratify_labels, each fold keeps per-class proportions within one
    sample; strata smaller than k trigger a warning and an unstratified split.
    """
    if not 2 <= k <= n:
        raise ValidationError(f"need 2 <= k <= n, got k={k}, n={n}")
    rng = SplitMix64(seed)
    assignment = np.empty(n, dtype=int)
    if stratify_labels is not None:
        labels = np.asarray(stratify_labels)
        if len(labels) != n:
            raise ValidationError("stratify_labels length must equal n")
        counts = {c: int(np.sum(labels == c)) for c in np.unique(labels)}
        if min(counts.values()) < k:
            warnings.warn(
                "a stratum is smaller than the number of folds; "
                "falling back to an unstratified split",
                UserWarning,
            )
            stratify_labels = None
    if stratify_labels is None:
        order = list(range(n))
        rng.shuffle(order)
        sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
        start = 0
        for fold, size in enumerate(sizes):
            assignment[order[start:start + size]] = fold
            start += size
    else:
        labels = np.asarray(stratify_labels)
        counter = 0
        for c in np.unique(labels):
            members = np.flatnonzero(labels == c).tolist()
            rng.shuffle(members)
            for idx in members:
                assignment[idx] = counter % k
                counter += 1
    folds = []
    for fold in range(k):
        test = np.flatnonzero(assignment == fold)
        train = np.flatnonzero(assignment != fold)
        folds.append((train, test))
    return folds


def knn_predict(train_x, train_y, test_x, knn_k: int, model):
    """Majority-vote k-NN in the learned space.

    Distance ties resolve toward the lower training index; vote ties toward
    the smallest label value.
    """
    train_x = np.asarray(train_x, dtype=float)
    train_y = np.asarray(train_y)
    if len(train_x) == 0:
        raise ValidationError("k-NN needs a non-empty training set")
    if knn_k > len(train_x):
        raise ValidationError(
            f"knn_k={knn_k} exceeds the {len(train_x)} training samples"
        )
    z_train = model.transform(train_x)
    z_test = model.transform(np.asarray(test_x, dtype=float))
    out = []
    for z in z_test:
        d = np.linalg.norm(z_train - z, axis=1)
        nearest = np.argsort(d, kind="stable")[:knn_k]
        votes, counts = np.unique(train_y[nearest], return_counts=True)
        out.append(votes[np.argmax(counts == counts.max())])
    return np.array(out)


def _fit_clone(estimator, *fit_args):
    est = estimator.clone()
    est.fit(*fit_args)
    return est


def _supervised_fold_scores(task, train, test, metric_name, fold):
    y_train, y_test = task.y[train], task.y[test]
    if len(np.unique(y_train)) < 2:
        raise ValidationError(f"fold {fold} is degenerate: one class in training data")
    est = _fit_clone(task.estimator, task.x[train], y_train)
    model = est.model_

    def knn_score(xs, ys):
        pred = knn_predict(task.x[train], y_train, xs, task.knn_k, model)
        if metric_name == "accuracy":
            return float(np.mean(pred == ys))
        return score(metric_name, ys, pred)

    return knn_score(task.x[test], y_test), knn_score(task.x[train], y_train), model


def _pairs_fold_scores(task, train, test, metric_name, fold):
    y_train, y_test = task.y[train], task.y[test]
    if len(np.unique(y_train)) < 2:
        raise ValidationError(f"fold {fold} is degenerate: one pair label in training data")
    est = _fit_clone(task.estimator, task.pairs[train], y_train)
    model = est.model_
    if metric_name == "roc_auc":
        test_s = score(metric_name, y_test, model.decision_function_pairs(task.pairs[test]))
        train_s = score(metric_name, y_train, model.decision_function_pairs(task.pairs[train]))
    else:
        est.calibrate_threshold(task.pairs[train], y_train, metric_name)
        test_s = score(metric_name, y_test, model.predict_pairs(task.pairs[test]))
        train_s = score(metric_name, y_train, model.predict_pairs(task.pairs[train]))
    return test_s, train_s, model


def _quads_fold_scores(task, train, test, metric_name, fold):
    est = _fit_clone(task.estimator, task.quads[train])
    model = est.model_
    test_s = float(np.mean(model.predict_quadruplets(task.quads[test]) == 1))
    train_s = float(np.mean(model.predict_quadruplets(task.quads[train]) == 1))
    return test_s, train_s, model


def cross_validate(task, k: int, seed: int, metric_name: str = "accuracy") -> CvResult:
    """Per-fold fit and evaluation; no test-fold information reaches a fit."""
    if isinstance(task, SupervisedTask):
        n = len(task.x)
        folds = kfold_split(n, k, seed, stratify_labels=task.y)
        fold_fn = _supervised_fold_scores
    elif isinstance(task, PairsTask):
        validate_tuples(task.pairs, 2, labels=task.y)
        folds = kfold_split(len(task.pairs), k, seed)
        fold_fn = _pairs_fold_scores
    elif isinstance(task, QuadrupletsTask):
        validate_tuples(task.quads, 4)
        folds = kfold_split(len(task.quads), k, seed)
        fold_fn = _quads_fold_scores
    else:
        raise ValidationError(f"unknown task type {type(task).__name__}")
    test_scores, train_scores, models = [], [], []
    for fold, (train, test) in enumerate(folds):
        test_s, train_s, model = fold_fn(task, train, test, metric_name, fold)
        test_scores.append(test_s)
        train_scores.append(train_s)
        models.append(model)
    mean = sum(test_scores) / len(test_scores)
    std = float(np.sqrt(sum((s - mean) ** 2 for s in test_scores) / len(test_scores)))
    return CvResult(test_scores, train_scores, float(mean), std, folds, models)


def _apply_candidate(task, params: dict):
    est = task.estimator.clone()
    task = replace(task, estimator=est)
    for name, value in params.items():
        if name == "knn_k":
            if not isinstance(task, SupervisedTask):
                raise ValidationError("knn_k only applies to supervised tasks")
            task.knn_k = int(value)
        else:
            est.set_params(**{name: value})
    return task


def grid_search(task, grid: dict, k: int, seed: int, metric_name: str = "accuracy"):
    """Exhaustive search over the Cartesian grid under identical folds.

    Returns (best_row, table); ties break toward the earliest candidate in
    product order (grid keys in declaration order, values in list order).
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValidationError("grid must map names to non-empty value lists")
    names = list(grid.keys())
    table = []
    best = None
    for values in itertools.product(*(grid[name] for name in names)):
        params = dict(zip(names, values))
        try:
            result = cross_validate(_apply_candidate(task, params), k, seed,
                                    metric_name)
        except ValidationError as exc:
            raise ValidationError(f"candidate {params}: {exc}") from exc
        row = {"params": params, "test_scores": result.test_scores,
               "train_scores": result.train_scores, "mean": result.mean,
               "std": result.std}
        table.append(row)
        if best is None or row["mean"] > best["mean"]:
            best = row
    return best, table
