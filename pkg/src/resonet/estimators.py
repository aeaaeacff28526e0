"""scikit-learn style wrappers around codebook decoding and factorization.

Rows of ``X`` are vectors of dimension ``N`` (bipolar or integer superpositions).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .codebook import Codebook, build_codebook
from .resonator import FactorizationProblem, ResonatorConfig, solve
from .vsa import Hypervector, SumVector, derive_seed

__all__ = ["CodebookDecoder", "ResonatorFactorizer"]


def _as_vector(row: np.ndarray):
    row = row.astype(np.int64)
    if np.all(np.abs(row) == 1):
        return Hypervector._wrap(row.astype(np.int8))
    # smallest term count consistent with the row
    return SumVector(row, int(np.max(np.abs(row))))


class CodebookDecoder(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Nearest-neighbour decoding against a codebook learnt from ``(X, y)``.

    ``fit`` stores each row of ``X`` (bipolar) under its label in ``y``.
    ``transform`` returns cosine similarity profiles; ``predict`` the best label.
    """

    def __init__(self, name: str = "codebook"):
        self.name = name

    def fit(self, X, y):
        X = check_array(X, dtype=np.int8)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError("y must hold one label per row of X")
        labels = [str(v) for v in y]
        self.codebook_ = Codebook(self.name, labels, [Hypervector(row) for row in X])
        self.classes_ = y.copy()
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "codebook_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0):
            raise ValueError("cannot compare a zero vector")
        raw = X @ self.codebook_.matrix_f.T
        return raw / (norms[:, None] * np.sqrt(self.n_features_in_))

    def predict(self, X):
        profiles = self.transform(X)
        return self.classes_[np.argmax(profiles, axis=1)]


class ResonatorFactorizer(TransformerMixin, BaseEstimator):
    """Factor each row of ``X`` into one entry per codebook.

    With ``codebooks=None``, ``fit`` draws random codebooks of
    ``codebook_sizes`` entries at dimension ``dim``; otherwise it adopts the
    given :class:`Codebook` objects. ``predict`` returns an ``(n, F)`` array
    of entry indices, ``transform`` the residual similarity of each row.
    """

    def __init__(
        self,
        codebook_sizes: Sequence[int] = (10, 10, 10),
        dim: int = 1000,
        codebooks: Optional[Sequence[Codebook]] = None,
        max_iterations: int = 200,
        normalize_input: bool = True,
        seed: int = 0,
    ):
        self.codebook_sizes = codebook_sizes
        self.dim = dim
        self.codebooks = codebooks
        self.max_iterations = max_iterations
        self.normalize_input = normalize_input
        self.seed = seed

    def fit(self, X=None, y=None):
        if self.codebooks is not None:
            cbs = tuple(self.codebooks)
        else:
            sizes = tuple(int(d) for d in self.codebook_sizes)
            if len(sizes) < 2 or min(sizes) < 1:
                raise ValueError("need at least two codebooks of size >= 1")
            cbs = tuple(
                build_codebook(f"factor{f}", [str(i) for i in range(d)], self.dim, derive_seed(self.seed, f))
                for f, d in enumerate(sizes)
            )
        dims = {cb.dim for cb in cbs}
        if len(dims) != 1:
            raise ValueError("codebooks must share one dimension")
        if X is not None:
            X = check_array(X)
            if X.shape[1] != cbs[0].dim:
                raise ValueError(f"X has {X.shape[1]} features, codebooks have dim {cbs[0].dim}")
        self.codebooks_ = cbs
        self.n_features_in_ = cbs[0].dim
        self.config_ = ResonatorConfig(
            max_iterations=self.max_iterations,
            normalize_input=self.normalize_input,
            record_trajectory=False,
            seed=self.seed,
        )
        return self

    def make_products(self, indices) -> np.ndarray:
        """Exact product vectors for an ``(n, F)`` array of entry indices."""
        check_is_fitted(self, "codebooks_")
        indices = check_array(indices, dtype=np.int64)
        if indices.shape[1] != len(self.codebooks_):
            raise ValueError(f"expected {len(self.codebooks_)} indices per row")
        out = np.ones((indices.shape[0], self.n_features_in_), dtype=np.int8)
        for f, cb in enumerate(self.codebooks_):
            out *= cb.matrix[indices[:, f]]
        return out

    def _solve_rows(self, X):
        check_is_fitted(self, "codebooks_")
        X = check_array(X, dtype=np.int64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return [solve(FactorizationProblem(_as_vector(row), self.codebooks_), self.config_)[0] for row in X]

    def predict(self, X) -> np.ndarray:
        return np.array([r.indices for r in self._solve_rows(X)], dtype=np.int64)

    def transform(self, X) -> np.ndarray:
        return np.array([[r.residual_similarity] for r in self._solve_rows(X)])

    def score(self, X, y) -> float:
        """Fraction of rows whose every factor is recovered."""
        y = check_array(y, dtype=np.int64)
        return float(np.mean(np.all(self.predict(X) == y, axis=1)))
