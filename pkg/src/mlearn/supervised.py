"""Fully supervised metric learners.

Three gradient-based learners (neighborhood softmax, large-margin nearest
neighbors, kernel-regression loss) share the backtracking solver; the other
two (local Fisher discriminant analysis, chunklet whitening) are closed-form.
No implicit centering or scaling is applied to the input features.
"""

from __future__ import annotations

import warnings

import numpy as np

from .base import MahalanobisEstimator
from .exceptions import ValidationError
from .linalg import gen_sym_eig, psd_sqrt
from .model import FitReport, MahalanobisModel, _as_features
from .optimize import backtracking_solve


def _check_classification(x, y):
    x = _as_features(x)
    y = np.asarray(y)
    if len(y) != len(x):
        raise ValidationError("labels length must match number of samples")
    if len(np.unique(y)) < 2:
        raise ValidationError("degenerate labels: need at least 2 distinct classes")
    return x, y


def _init_transform(init: str, n_components: int, n_features: int, seed: int):
    if init == "identity":
        return np.eye(n_features)[:n_components].copy()
    if init == "random":
        rng = np.random.default_rng(seed)
        return rng.standard_normal((n_components, n_features)) / np.sqrt(n_features)
    raise ValidationError(f"unknown init {init!r}; expected 'identity' or 'random'")


def _resolve_components(n_components, n_features: int) -> int:
    m = n_features if n_components is None else int(n_components)
    if not 1 <= m <= n_features:
        raise ValidationError(
            f"n_components must be in [1, {n_features}], got {m}"
        )
    return m


def pairwise_sq_dists(z: np.ndarray) -> np.ndarray:
    sq = np.sum(z * z, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def weighted_outer_sum(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_ij w_ij (x_i - x_j)(x_i - x_j)^T without forming the outer products."""
    s = w + w.T
    r = s.sum(axis=1)
    g = x.T @ (r[:, None] * x) - x.T @ (s @ x)
    return 0.5 * (g + g.T)


# -- neighborhood softmax (NCA) ---------------------------------------------

def nca_objective(l: np.ndarray, x: np.ndarray, y: np.ndarray):
    """Expected same-class softmax mass and its gradient with respect to l."""
    z = x @ l.T
    d2 = pairwise_sq_dists(z)
    logits = -d2
    np.fill_diagonal(logits, -np.inf)
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    np.fill_diagonal(p, 0.0)
    same = (y[:, None] == y[None, :]) & ~np.eye(len(y), dtype=bool)
    p_i = np.sum(p * same, axis=1)
    f = float(p_i.sum())
    w = p * p_i[:, None] - p * same
    grad = 2.0 * l @ weighted_outer_sum(x, w)
    return f, grad


class NCA(MahalanobisEstimator):
    """Gradient-ascent learner maximizing stochastic same-class neighbor mass."""

    def __init__(self, n_components=None, init="identity", max_iter=100,
                 tol=1e-6, seed=0):
        self.n_components = n_components
        self.init = init
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, x, y):
        x, y = _check_classification(x, y)
        m = _resolve_components(self.n_components, x.shape[1])
        l0 = _init_transform(self.init, m, x.shape[1], self.seed)
        l, report = backtracking_solve(
            lambda l_: nca_objective(l_, x, y), l0,
            max_iter=self.max_iter, tol=self.tol, maximize=True,
        )
        self._set_model(MahalanobisModel(l, algorithm="nca", fit_report=report))
        return self


# -- large margin nearest neighbors (LMNN) ----------------------------------

def lmnn_targets(x: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    """k same-class Euclidean nearest neighbors per point, fixed before fitting."""
    d2 = pairwise_sq_dists(x)
    targets = np.empty((len(x), k), dtype=int)
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if len(members) < k + 1:
            raise ValidationError(
                f"class {c!r} has {len(members)} members but k={k} target "
                f"neighbors require at least {k + 1}"
            )
        for i in members:
            others = members[members != i]
            order = others[np.argsort(d2[i, others], kind="stable")]
            targets[i] = order[:k]
    return targets


def lmnn_objective(l: np.ndarray, x: np.ndarray, y: np.ndarray,
                   targets: np.ndarray, push_weight: float, margin: float):
    """Pull + hinge-push loss and its (sub)gradient.

    The loss sums every hinge term, so it is a deterministic function of l;
    the gradient uses the impostor set active at l.
    """
    z = x @ l.T
    d2 = pairwise_sq_dists(z)
    n = len(x)
    w_pull = np.zeros((n, n))
    w_push = np.zeros((n, n))
    pull = 0.0
    push = 0.0
    for i in range(n):
        diff = np.flatnonzero(y != y[i])
        for j in targets[i]:
            w_pull[i, j] += 1.0
            pull += d2[i, j]
            h = margin + d2[i, j] - d2[i, diff]
            active = diff[h > 0.0]
            push += float(np.sum(h[h > 0.0]))
            w_push[i, j] += len(active)
            for li in active:
                w_push[i, li] -= 1.0
    f = (1.0 - push_weight) * pull + push_weight * push
    g = (1.0 - push_weight) * weighted_outer_sum(x, w_pull) \
        + push_weight * weighted_outer_sum(x, w_push)
    return f, 2.0 * l @ g


class LMNN(MahalanobisEstimator):
    """Margin-based learner pulling target neighbors and pushing impostors."""

    def __init__(self, k=3, push_weight=0.5, margin=1.0, n_components=None,
                 init="identity", max_iter=100, tol=1e-6, seed=0):
        self.k = k
        self.push_weight = push_weight
        self.margin = margin
        self.n_components = n_components
        self.init = init
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, x, y):
        x, y = _check_classification(x, y)
        if not 0.0 < self.push_weight < 1.0:
            raise ValidationError("push_weight must lie strictly in (0, 1)")
        targets = lmnn_targets(x, y, int(self.k))
        m = _resolve_components(self.n_components, x.shape[1])
        l0 = _init_transform(self.init, m, x.shape[1], self.seed)
        l, report = backtracking_solve(
            lambda l_: lmnn_objective(l_, x, y, targets, self.push_weight,
                                      self.margin),
            l0, max_iter=self.max_iter, tol=self.tol,
        )
        self._set_model(MahalanobisModel(l, algorithm="lmnn", fit_report=report))
        return self


# -- kernel-regression loss (MLKR) ------------------------------------------

def mlkr_objective(l: np.ndarray, x: np.ndarray, y: np.ndarray):
    """Leave-one-out Nadaraya-Watson squared error and its gradient."""
    z = x @ l.T
    d2 = pairwise_sq_dists(z)
    k = np.exp(-d2)
    np.fill_diagonal(k, 0.0)
    s = k.sum(axis=1) + 1e-300
    yhat = (k @ y) / s
    r = yhat - y
    f = float(np.sum(r * r))
    w = -2.0 * (r / s)[:, None] * (y[None, :] - yhat[:, None]) * k
    grad = 2.0 * l @ weighted_outer_sum(x, w)
    return f, grad


class MLKR(MahalanobisEstimator):
    """Metric learner minimizing leave-one-out kernel-regression error."""

    def __init__(self, n_components=None, init="identity", max_iter=100,
                 tol=1e-6, seed=0):
        self.n_components = n_components
        self.init = init
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, x, y):
        x = _as_features(x)
        y = np.asarray(y, dtype=float)
        if len(y) != len(x):
            raise ValidationError("targets length must match number of samples")
        if len(x) < 3:
            raise ValidationError("need at least 3 samples")
        m = _resolve_components(self.n_components, x.shape[1])
        l0 = _init_transform(self.init, m, x.shape[1], self.seed)
        if np.ptp(y) == 0.0:
            warnings.warn(
                "degenerate regression targets: y is constant, loss is 0 for "
                "any transform; returning the initial transform",
                UserWarning,
            )
            report = FitReport(True, 1, 0.0, (0.0,))
            self._set_model(MahalanobisModel(l0, algorithm="mlkr",
                                             fit_report=report))
            return self
        l, report = backtracking_solve(
            lambda l_: mlkr_objective(l_, x, y), l0,
            max_iter=self.max_iter, tol=self.tol,
        )
        self._set_model(MahalanobisModel(l, algorithm="mlkr", fit_report=report))
        return self


# -- local Fisher discriminant analysis (LFDA) ------------------------------

def _local_scaling(x, members, knn):
    """sigma_i = distance to the knn-th same-class neighbor, capped at class size - 1."""
    d = np.sqrt(pairwise_sq_dists(x[members]))
    kn = min(knn, len(members) - 1)
    sigma = np.empty(len(members))
    for a in range(len(members)):
        others = np.sort(np.delete(d[a], a), kind="stable")
        sigma[a] = others[kn - 1]
    return sigma


class LFDA(MahalanobisEstimator):
    """Closed-form learner via the local Fisher generalized eigenproblem."""

    def __init__(self, n_components=None, knn=7, embedding="weighted"):
        self.n_components = n_components
        self.knn = knn
        self.embedding = embedding

    def fit(self, x, y):
        x, y = _check_classification(x, y)
        if self.embedding not in ("weighted", "plain"):
            raise ValidationError("embedding must be 'weighted' or 'plain'")
        n, d = x.shape
        m = _resolve_components(self.n_components, d)
        w_within = np.zeros((n, n))
        w_between = np.full((n, n), 1.0 / n)
        np.fill_diagonal(w_between, 0.0)
        for c in np.unique(y):
            members = np.flatnonzero(y == c)
            if len(members) < 2:
                raise ValidationError(
                    f"degenerate class: class {c!r} has a single member"
                )
            sigma = _local_scaling(x, members, int(self.knn))
            sigma = np.maximum(sigma, np.finfo(float).tiny)
            d2 = pairwise_sq_dists(x[members])
            with np.errstate(over="ignore", under="ignore"):
                aff = np.exp(-d2 / np.outer(sigma, sigma))
            np.fill_diagonal(aff, 0.0)
            nc = len(members)
            ix = np.ix_(members, members)
            w_within[ix] = aff / nc
            w_between[ix] = aff * (1.0 / n - 1.0 / nc)
        s_within = 0.5 * weighted_outer_sum(x, 0.5 * (w_within + w_within.T))
        s_between = 0.5 * weighted_outer_sum(x, 0.5 * (w_between + w_between.T))
        eps = 1e-9 * np.trace(s_within) / d
        res = gen_sym_eig(s_between, s_within + eps * np.eye(d), m)
        l = res.eigenvectors.T
        if self.embedding == "weighted":
            l = l * np.sqrt(np.clip(res.eigenvalues, 0.0, None))[:, None]
        obj = float(np.sum(res.eigenvalues))
        report = FitReport(True, 1, obj, (obj,))
        self._set_model(MahalanobisModel(l, algorithm="lfda", fit_report=report))
        return self


# -- chunklet whitening (RCA) ------------------------------------------------

class RCA(MahalanobisEstimator):
    """Whitens the pooled within-chunklet covariance (closed form).

    Chunklets are groups of points known to share a class; the assignment
    vector uses -1 for unassigned points. Chunklets with fewer than 2 members
    carry no constraint and are ignored.
    """

    def __init__(self, reg=1e-8, n_components=None):
        self.reg = reg
        self.n_components = n_components

    def fit(self, x, chunks):
        x = _as_features(x)
        chunks = np.asarray(chunks)
        if len(chunks) != len(x):
            raise ValidationError("chunklet assignment length must match samples")
        d = x.shape[1]
        if self.n_components is not None and int(self.n_components) != d:
            raise ValidationError(
                "this learner does not reduce dimension: n_components must "
                f"equal n_features ({d})"
            )
        cov = np.zeros((d, d))
        count = 0
        for c in np.unique(chunks):
            if c < 0:
                continue
            members = np.flatnonzero(chunks == c)
            if len(members) < 2:
                continue
            centered = x[members] - x[members].mean(axis=0)
            cov += centered.T @ centered
            count += len(members)
        if count == 0:
            raise ValidationError(
                "no constraints: need at least one chunklet with 2 or more members"
            )
        cov /= count
        l = psd_sqrt(cov + float(self.reg) * np.eye(d), invert=True)
        report = FitReport(True, 1, 0.0, (0.0,))
        self._set_model(MahalanobisModel(l, algorithm="rca", fit_report=report))
        return self
