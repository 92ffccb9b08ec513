"""Tuple supervision: validation and samplers over labeled data.

Tuple sets are plain 3-D numpy arrays of shape (n_tuples, t, n_features)
with t = 2 (pairs), 3 (triplets: anchor, positive, negative) or 4
(quadruplets: close pair then far pair). Pairs may carry a +/-1 label vector;
the other arities never do.

The samplers bridge class-labeled data to the weakly-supervised learners.
Rows are copied verbatim into the tuple blocks and all randomness comes from
the package's SplitMix64 generator, so a seed reproduces tuples exactly on
any platform.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError, ValidationError
from .rng import SplitMix64


def validate_tuples(tuples, expected_t: int, n_features: int | None = None,
                    labels=None) -> np.ndarray:
    """Check a tuple block against arity, width, finiteness and label rules."""
    tuples = np.asarray(tuples, dtype=float)
    if tuples.ndim != 3:
        raise DimensionError(f"tuple array must be 3-D, got ndim={tuples.ndim}")
    if tuples.shape[1] != expected_t:
        raise ValidationError(
            f"arity mismatch: expected tuples of {expected_t} points, "
            f"got {tuples.shape[1]}"
        )
    if n_features is not None and tuples.shape[2] != n_features:
        raise DimensionError(
            f"width mismatch: expected {n_features} features, got {tuples.shape[2]}"
        )
    if not np.all(np.isfinite(tuples)):
        raise ValidationError("tuple array contains non-finite entries")
    if labels is not None:
        if expected_t != 2:
            raise ValidationError("labels are only permitted for pairs (t=2)")
        labels = np.asarray(labels)
        if labels.shape != (tuples.shape[0],):
            raise ValidationError(
                f"labels must have length {tuples.shape[0]}, got shape {labels.shape}"
            )
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValidationError("pair labels must take values in {+1, -1}")
    return tuples


def _class_index(y) -> dict:
    y = np.asarray(y)
    return {label: np.flatnonzero(y == label).tolist() for label in np.unique(y)}


def _check_classes(by_class: dict, what: str) -> None:
    if len(by_class) < 2:
        raise ValidationError(f"{what} requires at least 2 distinct classes")
    for label, members in by_class.items():
        if len(members) < 2:
            raise ValidationError(
                f"cannot build {what}: class {label!r} has a single member"
            )


def _draw_partners(rng: SplitMix64, pool: list, k: int) -> list:
    # without replacement when the pool allows, with replacement otherwise
    return rng.sample(pool, k, replace=k > len(pool))


def pairs_from_labels(x, y, k: int, seed: int):
    """k similar and k dissimilar pairs per sample; returns (pairs, labels).

    Similar partners are drawn uniformly from the sample's class (excluding
    itself), dissimilar partners from all other classes. Output order is by
    sample index, similar pairs first within each sample.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if len(y) != len(x):
        raise ValidationError("labels length must match number of samples")
    by_class = _class_index(y)
    _check_classes(by_class, "pairs")
    rng = SplitMix64(seed)
    blocks, labels = [], []
    for i in range(len(x)):
        same = [j for j in by_class[y[i]] if j != i]
        other = [j for j in range(len(x)) if y[j] != y[i]]
        for j in _draw_partners(rng, same, k):
            blocks.append((i, j))
            labels.append(1)
        for j in _draw_partners(rng, other, k):
            blocks.append((i, j))
            labels.append(-1)
    pairs = np.stack([np.stack([x[i], x[j]]) for i, j in blocks])
    return pairs, np.array(labels)


def triplets_from_labels(x, y, k: int, seed: int) -> np.ndarray:
    """k triplets (anchor, same-class positive, other-class negative) per sample."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if len(y) != len(x):
        raise ValidationError("labels length must match number of samples")
    by_class = _class_index(y)
    _check_classes(by_class, "triplets")
    rng = SplitMix64(seed)
    blocks = []
    for i in range(len(x)):
        same = [j for j in by_class[y[i]] if j != i]
        other = [j for j in range(len(x)) if y[j] != y[i]]
        pos = _draw_partners(rng, same, k)
        neg = _draw_partners(rng, other, k)
        for j, l in zip(pos, neg):
            blocks.append((i, j, l))
    return np.stack([np.stack([x[a], x[b], x[c]]) for a, b, c in blocks])


def quadruplets_from_labels(x, y, k: int, seed: int) -> np.ndarray:
    """k quadruplets per sample: (sample, same-class partner, random point,
    partner of a different class than the random point)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if len(y) != len(x):
        raise ValidationError("labels length must match number of samples")
    by_class = _class_index(y)
    _check_classes(by_class, "quadruplets")
    rng = SplitMix64(seed)
    all_idx = list(range(len(x)))
    blocks = []
    for i in range(len(x)):
        same = [j for j in by_class[y[i]] if j != i]
        for j in _draw_partners(rng, same, k):
            r = all_idx[rng.below(len(all_idx))]
            far_pool = [s for s in all_idx if y[s] != y[r]]
            s = far_pool[rng.below(len(far_pool))]
            blocks.append((i, j, r, s))
    return np.stack([np.stack([x[a], x[b], x[c], x[d]]) for a, b, c, d in blocks])
