"""Pair-threshold calibration: exact search over the midpoint grid.

Candidate thresholds are the midpoints between consecutive distinct sorted
distances plus two sentinels (min-1 and max+1). Every achievable confusion
matrix of the rule "distance <= threshold -> similar" is realized by one of
these candidates, so the search is exact. Ties go to the smallest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .scoring import accuracy_score, f1_score
from .tuples import validate_tuples


@dataclass(frozen=True)
class CalibrationResult:
    threshold: float
    achieved_score: float
    metric_name: str


def candidate_thresholds(distances) -> np.ndarray:
    d = np.unique(np.asarray(distances, dtype=float))
    mids = 0.5 * (d[:-1] + d[1:])
    return np.concatenate(([d[0] - 1.0], mids, [d[-1] + 1.0]))


def calibrate_threshold(model, pairs, y, metric: str = "accuracy") -> CalibrationResult:
    """Best pair threshold for the given metric on labeled pairs.

    Does not mutate the model; the caller stores the threshold where needed.
    """
    pairs = validate_tuples(pairs, 2, labels=y)
    if len(pairs) == 0:
        raise ValidationError("cannot calibrate on an empty pair set")
    y = np.asarray(y)
    if metric == "accuracy":
        scorer = accuracy_score
    elif metric == "f1":
        if not np.any(y == 1):
            raise ValidationError("f1 calibration needs at least one +1 label")
        scorer = f1_score
    else:
        raise ValidationError(f"unsupported calibration metric {metric!r}")
    distances = model.score_pairs(pairs)
    best_thr, best_score = None, -1.0
    for thr in candidate_thresholds(distances):
        s = scorer(y, np.where(distances <= thr, 1, -1))
        if s > best_score:
            best_thr, best_score = float(thr), s
    return CalibrationResult(best_thr, best_score, metric)
