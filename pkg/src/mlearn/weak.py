"""Weakly-supervised learners: pair-based MMC and ITML, quadruplet LSML.

MMC and ITML consume labeled pairs (+1 similar, -1 dissimilar); LSML consumes
quadruplets whose first pair should end up closer than the second. All three
optimize over the Mahalanobis matrix M directly and extract L as its
symmetric square-root factor at the end.
"""

from __future__ import annotations

import numpy as np

from .base import MahalanobisEstimator, PairClassifierMixin, QuadrupletClassifierMixin
from .calibration import CalibrationResult, calibrate_threshold  # noqa: F401 (public API)
from .exceptions import NumericalError, ValidationError
from .linalg import psd_project, psd_sqrt, sym_eig
from .model import FitReport, MahalanobisModel
from .optimize import backtracking_solve
from .tuples import validate_tuples

_EIG_FLOOR = 1e-10  # keeps log-determinants finite in LSML


def _split_pairs(pairs, y):
    pairs = validate_tuples(pairs, 2, labels=y)
    y = np.asarray(y)
    pos = pairs[y == 1, 0] - pairs[y == 1, 1]
    neg = pairs[y == -1, 0] - pairs[y == -1, 1]
    if len(pos) == 0 or len(neg) == 0:
        raise ValidationError(
            "degenerate constraints: need at least one +1 and one -1 pair"
        )
    return pos, neg


def _prior_matrix(prior: str, points: np.ndarray, d: int) -> np.ndarray:
    """Identity, or the regularized inverse covariance of the tuple points."""
    if prior == "identity":
        return np.eye(d)
    if prior == "covariance-inverse":
        centered = points - points.mean(axis=0)
        cov = centered.T @ centered / max(len(points), 1)
        reg = 1e-8 * np.trace(cov) / d if np.trace(cov) > 0 else 1e-8
        b = psd_sqrt(cov + reg * np.eye(d), invert=True)
        return b.T @ b
    raise ValidationError(
        f"unknown prior {prior!r}; expected 'identity' or 'covariance-inverse'"
    )


def _spd_inverse(m: np.ndarray) -> np.ndarray:
    r = sym_eig(m)
    if r.eigenvalues[-1] <= 0:
        raise NumericalError("matrix is singular; cannot invert")
    inv = (r.eigenvectors / r.eigenvalues) @ r.eigenvectors.T
    return 0.5 * (inv + inv.T)


# -- MMC ---------------------------------------------------------------------

def mmc_diag_objective(w: np.ndarray, pos2: np.ndarray, neg2: np.ndarray):
    """Diagonal-variant objective g(w) and gradient; pos2/neg2 hold squared
    pair differences row-wise."""
    sim = float(np.sum(pos2 @ w))
    dis = np.sqrt(np.maximum(neg2 @ w, 0.0))
    total = float(np.sum(dis))
    if total <= 0.0:
        # infeasible trial point (all weight clipped away); reject via +inf
        return np.inf, np.zeros_like(w)
    f = sim - np.log(total)
    safe = dis > 0.0
    grad = pos2.sum(axis=0) - (neg2[safe] / (2.0 * dis[safe, None])).sum(axis=0) / total
    return f, grad


class MMC(MahalanobisEstimator, PairClassifierMixin):
    """Clustering-style pair learner: keep similar pairs within a unit budget
    while spreading dissimilar pairs.

    The full variant runs projected gradient ascent on sum of dissimilar
    distances, alternating the PSD cone projection with a rescale onto the
    similarity budget. The diagonal variant runs projected descent on the
    standard log-barrier formulation over nonnegative diagonal weights.
    """

    def __init__(self, diagonal=False, max_iter=100, tol=1e-6, seed=0):
        self.diagonal = diagonal
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, pairs, y):
        pos, neg = _split_pairs(pairs, y)
        if not np.any(np.sum(neg * neg, axis=1) > 0.0):
            raise NumericalError(
                "all dissimilar pairs coincide: log of zero distance"
            )
        if self.diagonal:
            model = self._fit_diagonal(pos, neg)
        else:
            model = self._fit_full(pos, neg)
        self._set_model(model)
        return self

    def _fit_diagonal(self, pos, neg):
        d = pos.shape[1]
        pos2, neg2 = pos * pos, neg * neg
        w0 = np.ones(d)
        w, report = backtracking_solve(
            lambda w_: mmc_diag_objective(w_, pos2, neg2), w0,
            max_iter=self.max_iter, tol=self.tol,
            project=lambda w_: np.clip(w_, 0.0, None),
        )
        return MahalanobisModel(np.diag(np.sqrt(w)), algorithm="mmc",
                                fit_report=report)

    def _fit_full(self, pos, neg):
        d = pos.shape[1]

        def budget(m):
            return float(np.sum((pos @ m) * pos))

        def project(m):
            m = psd_project(0.5 * (m + m.T))
            s = budget(m)
            return m / s if s > 1.0 else m

        def objective(m):
            dist = np.sqrt(np.maximum(np.sum((neg @ m) * neg, axis=1), 0.0))
            f = float(np.sum(dist))
            safe = dist > 0.0
            grad = np.zeros((d, d))
            for v, dv in zip(neg[safe], dist[safe]):
                grad += np.outer(v, v) / (2.0 * dv)
            return f, grad

        total_pos = budget(np.eye(d))
        m0 = np.eye(d) / total_pos if total_pos > 0 else np.eye(d)
        m, report = backtracking_solve(
            objective, m0, max_iter=self.max_iter, tol=self.tol,
            maximize=True, project=project,
        )
        return MahalanobisModel(psd_sqrt(m), algorithm="mmc", fit_report=report)


# -- ITML --------------------------------------------------------------------

def itml_bounds(pairs, percentiles) -> tuple[float, float]:
    """Similarity/dissimilarity bounds on squared Euclidean pair distances."""
    low, high = percentiles
    if not 0 <= low < high <= 100:
        raise ValidationError("percentiles must satisfy 0 <= low < high <= 100")
    pairs = np.asarray(pairs, dtype=float)
    d2 = np.sum((pairs[:, 0] - pairs[:, 1]) ** 2, axis=1)
    u, l = np.percentile(d2, (low, high))
    if u > l:
        raise ValidationError(
            f"infeasible bounds: similarity bound {u:g} exceeds dissimilarity "
            f"bound {l:g}; try different percentiles"
        )
    # zero bounds would break the multiplicative updates
    return max(float(u), 1e-9), max(float(l), 1e-9)


class ITML(MahalanobisEstimator, PairClassifierMixin):
    """Bregman-projection pair learner anchored to a prior metric.

    Cycles through the pair constraints, applying to each a rank-one
    multiplicative update of M that enforces the (slack-adjusted) distance
    bound while moving minimally in LogDet divergence. gamma controls the
    slack: larger values enforce the bounds more strictly.
    """

    def __init__(self, gamma=1.0, percentiles=(5, 95), prior="identity",
                 max_iter=100, tol=1e-6, seed=0):
        self.gamma = gamma
        self.percentiles = percentiles
        self.prior = prior
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, pairs, y):
        deltas = []
        a = None
        for a, _lam, _it, delta in self._cycles(pairs, y):
            deltas.append(delta)
        converged = bool(deltas) and deltas[-1] <= self.tol
        trace = tuple(deltas) if deltas else (0.0,)
        report = FitReport(converged, len(trace), trace[-1], trace)
        model = MahalanobisModel(psd_sqrt(psd_project(a)), algorithm="itml",
                                 fit_report=report)
        self._set_model(model)
        return self

    def _cycles(self, pairs, y):
        """Yield (M, multipliers, cycle, multiplier-change) per full cycle."""
        pos, neg = _split_pairs(pairs, y)
        d = pos.shape[1]
        u, l = itml_bounds(np.asarray(pairs, dtype=float), self.percentiles)
        self.bounds_ = (u, l)
        gamma = float(self.gamma)
        if gamma <= 0:
            raise ValidationError("gamma must be > 0")
        gamma_proj = gamma / (gamma + 1.0)
        a = _prior_matrix(self.prior, np.asarray(pairs, float).reshape(-1, d),
                          d).copy()
        vecs = np.vstack([pos, neg])
        n_pos = len(pos)
        lam = np.zeros(len(vecs))
        bhat = np.concatenate([np.full(n_pos, u), np.full(len(neg), l)])
        for it in range(1, self.max_iter + 1):
            lam_old = lam.copy()
            for i, v in enumerate(vecs):
                wtw = float(v @ a @ v)
                if wtw <= 0.0:
                    continue
                if i < n_pos:
                    alpha = min(lam[i], gamma_proj * (1.0 / wtw - 1.0 / bhat[i]))
                    beta = alpha / (1.0 - alpha * wtw)
                    bhat[i] = 1.0 / (1.0 / bhat[i] + alpha / gamma)
                else:
                    alpha = min(lam[i], gamma_proj * (1.0 / bhat[i] - 1.0 / wtw))
                    beta = -alpha / (1.0 + alpha * wtw)
                    bhat[i] = 1.0 / (1.0 / bhat[i] - alpha / gamma)
                lam[i] -= alpha
                av = a @ v
                a += beta * np.outer(av, av)
            a = 0.5 * (a + a.T)
            delta = float(np.max(np.abs(lam - lam_old)))
            self.adjusted_bounds_ = bhat.copy()
            self.n_pos_constraints_ = n_pos
            yield a, lam, it, delta
            if delta <= self.tol:
                break


# -- LSML --------------------------------------------------------------------

def lsml_objective(m: np.ndarray, diffs_close: np.ndarray, diffs_far: np.ndarray,
                   m0inv: np.ndarray, logdet_m0: float, reg: float):
    """Squared-residual hinge over quadruplets plus LogDet anchoring to the
    prior; gradient treats the hinge active set as fixed."""
    d = m.shape[0]
    r = sym_eig(m)
    vals = np.maximum(r.eigenvalues, _EIG_FLOOR)
    logdet_m = float(np.sum(np.log(vals)))
    minv = (r.eigenvectors / vals) @ r.eigenvectors.T
    smooth = reg * (float(np.trace(m @ m0inv)) - (logdet_m - logdet_m0) - d)
    d_close = np.sqrt(np.maximum(np.sum((diffs_close @ m) * diffs_close, axis=1), 0.0))
    d_far = np.sqrt(np.maximum(np.sum((diffs_far @ m) * diffs_far, axis=1), 0.0))
    viol = np.maximum(d_close - d_far, 0.0)
    f = smooth + float(np.sum(viol * viol))
    grad = reg * (m0inv - minv)
    for q in np.flatnonzero(viol > 0.0):
        v = viol[q]
        if d_close[q] > 0.0:
            grad += v / d_close[q] * np.outer(diffs_close[q], diffs_close[q])
        if d_far[q] > 0.0:
            grad -= v / d_far[q] * np.outer(diffs_far[q], diffs_far[q])
    return f, 0.5 * (grad + grad.T)


class LSML(MahalanobisEstimator, QuadrupletClassifierMixin):
    """Quadruplet learner minimizing squared residuals of ordering violations."""

    def __init__(self, reg=1.0, prior="identity", max_iter=100, tol=1e-6, seed=0):
        self.reg = reg
        self.prior = prior
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, quads):
        quads = validate_tuples(quads, 4)
        if len(quads) == 0:
            raise ValidationError("need at least one quadruplet")
        if float(self.reg) < 0:
            raise ValidationError("reg must be >= 0")
        d = quads.shape[2]
        m0 = _prior_matrix(self.prior, quads.reshape(-1, d), d)
        r0 = sym_eig(m0)
        if r0.eigenvalues[-1] <= 0 or not np.all(np.isfinite(np.log(
                np.maximum(r0.eigenvalues, 1e-300)))):
            raise ValidationError("invalid prior: log-determinant is not finite")
        logdet_m0 = float(np.sum(np.log(r0.eigenvalues)))
        m0inv = _spd_inverse(m0)
        diffs_close = quads[:, 0] - quads[:, 1]
        diffs_far = quads[:, 2] - quads[:, 3]

        def project(m):
            r = sym_eig(0.5 * (m + m.T))
            vals = np.maximum(r.eigenvalues, _EIG_FLOOR)
            out = (r.eigenvectors * vals) @ r.eigenvectors.T
            return 0.5 * (out + out.T)

        m, report = backtracking_solve(
            lambda m_: lsml_objective(m_, diffs_close, diffs_far, m0inv,
                                      logdet_m0, float(self.reg)),
            m0, max_iter=self.max_iter, tol=self.tol, project=project,
        )
        model = MahalanobisModel(psd_sqrt(m), algorithm="lsml", fit_report=report)
        self._set_model(model)
        return self
