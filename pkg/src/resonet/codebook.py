"""Named codebooks of atomic hypervectors and the clean-up memory built on them."""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence, Union

import numpy as np

from .vsa import (
    DimensionError,
    Hypervector,
    UndefinedSimilarityError,
    VectorLike,
    _sign,
    b64decode_hypervector,
    b64encode,
    derive_seed,
    random_hypervector,
)

__all__ = [
    "Codebook",
    "build_codebook",
    "similarity_profile",
    "cleanup",
    "decode",
    "codebook_to_json",
    "codebook_from_json",
]


class Codebook:
    """Ordered, labelled set of ``D`` hypervectors of equal dimension.

    The entries are held as a read-only ``(D, N)`` int8 matrix; ``matrix_f``
    is a float64 copy used for BLAS products. All values involved are small
    integers, so float products are exact.
    """

    __slots__ = ("name", "labels", "_matrix", "_matrix_f", "_index")

    def __init__(
        self,
        name: str,
        labels: Sequence[str],
        vectors: Union[np.ndarray, Sequence[Hypervector]],
    ):
        labels = tuple(str(label) for label in labels)
        if not labels:
            raise ValueError("codebook must have at least one entry")
        if len(set(labels)) != len(labels):
            dupes = sorted({x for x in labels if labels.count(x) > 1})
            raise ValueError(f"duplicate codebook labels: {dupes}")
        if isinstance(vectors, np.ndarray):
            raw = np.atleast_2d(vectors)
        else:
            vectors = list(vectors)
            dims = {v.dim for v in vectors}
            if len(dims) > 1:
                raise DimensionError(f"codebook entries have mixed dims {sorted(dims)}")
            raw = np.stack([np.asarray(v.elements) for v in vectors])
        if raw.shape[0] != len(labels):
            raise ValueError(f"{len(labels)} labels for {raw.shape[0]} vectors")
        if raw.shape[1] < 1:
            raise DimensionError("codebook dim must be >= 1")
        if not np.all((raw == 1) | (raw == -1)):
            raise ValueError("codebook entries must be bipolar")
        matrix = raw.astype(np.int8)
        matrix.setflags(write=False)
        matrix_f = matrix.astype(np.float64)
        matrix_f.setflags(write=False)
        self.name = str(name)
        self.labels = labels
        self._matrix = matrix
        self._matrix_f = matrix_f
        self._index = {label: i for i, label in enumerate(labels)}

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def matrix_f(self) -> np.ndarray:
        return self._matrix_f

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def size(self) -> int:
        return int(self._matrix.shape[0])

    def __len__(self) -> int:
        return self.size

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise KeyError(f"label {label!r} not in codebook {self.name!r}") from None

    def __getitem__(self, key: Union[int, str]) -> Hypervector:
        i = key if isinstance(key, (int, np.integer)) else self.index(key)
        return Hypervector._wrap(self._matrix[int(i)].copy())

    def __iter__(self):
        for i, label in enumerate(self.labels):
            yield label, self[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.name == other.name
            and self.labels == other.labels
            and np.array_equal(self._matrix, other._matrix)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Codebook({self.name!r}, D={self.size}, N={self.dim})"

    def permuted(self, k: int) -> "Codebook":
        """Same codebook with every entry cyclically shifted by ``k``."""
        return Codebook(self.name, self.labels, np.roll(self._matrix, int(k), axis=1))


def build_codebook(name: str, labels: Iterable[str], dim: int, seed: int) -> Codebook:
    """Random codebook; entry ``i`` is seeded from ``(seed, name, label_i)``."""
    labels = [str(x) for x in labels]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate codebook labels")
    if int(dim) < 1:
        raise DimensionError(f"dim must be >= 1, got {dim}")
    vectors = [random_hypervector(dim, derive_seed(int(seed), name, label)) for label in labels]
    return Codebook(name, labels, vectors)


def _as_float(v: VectorLike, dim: int) -> np.ndarray:
    if v.dim != dim:
        raise DimensionError(f"dimension mismatch: codebook {dim} vs vector {v.dim}")
    return v.elements.astype(np.float64)


def _cosines(cb: Codebook, values: np.ndarray) -> np.ndarray:
    norm2 = float(values @ values)
    if norm2 == 0.0:
        raise UndefinedSimilarityError("similarity to a zero vector is undefined")
    return (cb.matrix_f @ values) / math.sqrt(norm2 * cb.dim)


def similarity_profile(cb: Codebook, v: VectorLike) -> np.ndarray:
    """Cosine of ``v`` against every entry, in codebook order."""
    return _cosines(cb, _as_float(v, cb.dim))


def cleanup(cb: Codebook, v: VectorLike, previous: Hypervector | None = None) -> Hypervector:
    """Project onto the codebook span with raw dot products, then threshold.

    This is ``g(X X^T v)``; zeros hold ``previous`` when supplied.
    """
    values = _as_float(v, cb.dim)
    projected = cb.matrix_f.T @ (cb.matrix_f @ values)
    prev = None
    if previous is not None:
        if previous.dim != cb.dim:
            raise DimensionError("previous estimate has the wrong dimension")
        prev = previous.elements
    return Hypervector._wrap(_sign(projected, prev))


def decode(cb: Codebook, v: VectorLike) -> tuple[str, float]:
    """Nearest entry by cosine; ties go to the lowest index."""
    weights = similarity_profile(cb, v)
    i = int(np.argmax(weights))
    return cb.labels[i], float(weights[i])


def codebook_to_json(cb: Codebook) -> dict:
    return {
        "name": cb.name,
        "dim": cb.dim,
        "entries": [{"label": label, "vector": b64encode(vec)} for label, vec in cb],
    }


def codebook_from_json(obj: Union[dict, str]) -> Codebook:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        entries = obj["entries"]
        vectors = [b64decode_hypervector(e["vector"]) for e in entries]
        cb = Codebook(obj["name"], [e["label"] for e in entries], vectors)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed codebook: {exc}") from exc
    if cb.dim != int(obj["dim"]):
        raise DimensionError(f"declared dim {obj['dim']} but entries have dim {cb.dim}")
    return cb
