"""The learned-metric model: a linear map L plus prediction semantics.

A :class:`MahalanobisModel` wraps the transformation matrix ``L`` of shape
(n_components, n_features). The distance between two points is the Euclidean
distance after mapping through ``L``; equivalently the quadratic form under
M = L^T L. Distances are always reported non-squared; squared distances are
an internal detail of the solvers.

Distance computation deliberately goes through one shared per-pair helper so
that ``score_pairs``, ``get_metric`` and every predict method agree
bit-for-bit, which makes serialization round trips exactly reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, ValidationError
from .linalg import sym_eig


@dataclass(frozen=True)
class FitReport:
    """Convergence record of a fit: flag, iterations, objective trace."""

    converged: bool = True
    n_iter: int = 1
    final_objective: float = 0.0
    objective_trace: tuple = field(default=(0.0,))


def _as_features(x, n_features: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimensionError(f"expected a 2-D feature matrix, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("feature matrix contains non-finite entries")
    if n_features is not None and x.shape[1] != n_features:
        raise DimensionError(
            f"expected {n_features} feature columns, got {x.shape[1]}"
        )
    return x


def _as_tuples(t, arity: int, n_features: int | None = None) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 3 or t.shape[1] != arity:
        raise DimensionError(
            f"expected an array of shape (n, {arity}, n_features), got {t.shape}"
        )
    if not np.all(np.isfinite(t)):
        raise ValidationError("tuple array contains non-finite entries")
    if n_features is not None and t.shape[2] != n_features:
        raise DimensionError(
            f"expected {n_features} feature columns, got {t.shape[2]}"
        )
    return t


def _pair_distance(components: np.ndarray, x, y) -> float:
    # single shared code path for all distance computations (bit-exact
    # agreement between score_pairs, get_metric and the predict methods)
    z = (np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) @ components.T
    return math.sqrt(float(z @ z))


@dataclass
class MahalanobisModel:
    """Learned Mahalanobis metric: linear map, optional pair threshold."""

    components: np.ndarray
    threshold: float | None = None
    algorithm: str = "manual"
    fit_report: FitReport = field(default_factory=FitReport)

    def __post_init__(self):
        # force C layout: BLAS accumulates in layout-dependent order, and a
        # JSON round trip always loads C-contiguous, so mixed layouts would
        # break bit-exact save/load prediction equality
        l = np.ascontiguousarray(np.asarray(self.components, dtype=float))
        if l.ndim != 2 or l.size == 0:
            raise ValidationError("components must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(l)):
            raise ValidationError("components contain non-finite entries")
        if l.shape[0] > l.shape[1]:
            raise DimensionError(
                f"n_components ({l.shape[0]}) cannot exceed n_features ({l.shape[1]})"
            )
        if self.threshold is not None:
            thr = float(self.threshold)
            if not math.isfinite(thr) or thr < 0:
                raise ValidationError("threshold must be finite and >= 0")
            self.threshold = thr
        self.components = l

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]

    # -- core semantics -----------------------------------------------------

    def transform(self, x) -> np.ndarray:
        """Map data into the learned space: returns X L^T."""
        x = _as_features(x, self.n_features)
        return x @ self.components.T

    def score_pairs(self, pairs) -> np.ndarray:
        """Non-squared learned distance for each pair in an (n, 2, d) array."""
        pairs = _as_tuples(pairs, 2, self.n_features)
        l = self.components
        return np.array([_pair_distance(l, p[0], p[1]) for p in pairs])

    def get_metric(self):
        """Detached distance function over two feature vectors.

        The returned callable captures a copy of the transformation matrix and
        stays valid independently of this model's lifetime.
        """
        l = self.components.copy()
        d = self.n_features

        def metric(x, y) -> float:
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            if x.shape != (d,) or y.shape != (d,):
                raise DimensionError(
                    f"metric expects two vectors of length {d}, "
                    f"got shapes {x.shape} and {y.shape}"
                )
            return _pair_distance(l, x, y)

        return metric

    def get_mahalanobis_matrix(self) -> np.ndarray:
        """The PSD quadratic-form matrix M = L^T L."""
        m = self.components.T @ self.components
        return 0.5 * (m + m.T)

    # -- prediction ---------------------------------------------------------

    def predict_pairs(self, pairs) -> np.ndarray:
        """+1 (similar) where distance <= threshold, else -1; ties are +1."""
        if self.threshold is None:
            raise ValidationError(
                "pair threshold is not set; calibrate it or set it manually"
            )
        d = self.score_pairs(pairs)
        return np.where(d <= self.threshold, 1, -1)

    def decision_function_pairs(self, pairs) -> np.ndarray:
        """Continuous similarity score: the negated distance per pair."""
        return -self.score_pairs(pairs)

    def predict_triplets(self, triplets) -> np.ndarray:
        """+1 where the anchor is strictly closer to the second point."""
        triplets = _as_tuples(triplets, 3, self.n_features)
        l = self.components
        out = np.empty(len(triplets), dtype=int)
        for i, (a, b, c) in enumerate(triplets):
            out[i] = 1 if _pair_distance(l, a, b) < _pair_distance(l, a, c) else -1
        return out

    def predict_quadruplets(self, quads) -> np.ndarray:
        """+1 where the first pair is strictly closer than the second pair."""
        quads = _as_tuples(quads, 4, self.n_features)
        l = self.components
        out = np.empty(len(quads), dtype=int)
        for i, (a, b, c, d) in enumerate(quads):
            out[i] = 1 if _pair_distance(l, a, b) < _pair_distance(l, c, d) else -1
        return out

    # -- persistence --------------------------------------------------------

    def to_dict(self) -> dict:
        fr = self.fit_report
        return {
            "algorithm": self.algorithm,
            "n_features": self.n_features,
            "n_components": self.n_components,
            "components": [[float(v) for v in row] for row in self.components],
            "threshold": None if self.threshold is None else float(self.threshold),
            "fit_report": {
                "converged": bool(fr.converged),
                "n_iter": int(fr.n_iter),
                "final_objective": float(fr.final_objective),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MahalanobisModel":
        try:
            components = np.asarray(d["components"], dtype=float)
            fr = d.get("fit_report") or {}
            model = cls(
                components=components,
                threshold=d.get("threshold"),
                algorithm=str(d.get("algorithm", "manual")),
                fit_report=FitReport(
                    converged=bool(fr.get("converged", True)),
                    n_iter=int(fr.get("n_iter", 1)),
                    final_objective=float(fr.get("final_objective", 0.0)),
                    objective_trace=(float(fr.get("final_objective", 0.0)),),
                ),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed model document: {exc}") from exc
        if components.ndim == 2 and (
            model.n_features != int(d.get("n_features", model.n_features))
            or model.n_components != int(d.get("n_components", model.n_components))
        ):
            raise ValidationError("model document shape fields disagree with components")
        return model

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MahalanobisModel":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"invalid model JSON: {exc}") from exc
        return cls.from_dict(doc)

    def min_mahalanobis_eigenvalue(self) -> float:
        """Smallest eigenvalue of M = L^T L (should be >= -1e-9 always)."""
        return float(sym_eig(self.get_mahalanobis_matrix()).eigenvalues[-1])


def from_components(l) -> MahalanobisModel:
    """Wrap a raw transformation matrix as an untagged model."""
    return MahalanobisModel(components=np.asarray(l, dtype=float))
