"""Multiply-Add-Permute algebra on bipolar hypervectors.

Two value types carry the algebra:

* :class:`Hypervector`: a dense vector with every element in ``{-1, +1}``.
* :class:`SumVector`: an unthresholded integer superposition that remembers
  how many bipolar terms went into it.

Both are immutable wrappers around read-only numpy arrays. Every operation is
a pure function; randomness only enters through explicit integer seeds.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
import struct
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "DimensionError",
    "UndefinedSimilarityError",
    "Hypervector",
    "SumVector",
    "VectorLike",
    "derive_seed",
    "random_hypervector",
    "identity",
    "bind",
    "bind_all",
    "superpose",
    "sign_threshold",
    "permute",
    "dot",
    "cosine",
    "to_json",
    "from_json",
    "to_bytes",
    "hypervector_from_bytes",
    "sumvector_from_bytes",
]

_MASK64 = (1 << 64) - 1


class DimensionError(ValueError):
    """Raised for an invalid dimension or for mixing vectors of different sizes."""


class UndefinedSimilarityError(ValueError):
    """Raised when a cosine similarity involves a zero-norm vector."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Hypervector:
    """Bipolar vector, the atomic symbol of the algebra."""

    __slots__ = ("_elements",)

    def __init__(self, elements: Union[Sequence[int], np.ndarray]):
        raw = np.asarray(elements).reshape(-1)
        if raw.size == 0:
            raise DimensionError("hypervector must have dim >= 1")
        if not np.all((raw == 1) | (raw == -1)):
            raise ValueError("hypervector elements must be -1 or +1")
        self._elements = _frozen(raw.astype(np.int8))

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Hypervector":
        # trusted constructor: arr is already int8 and bipolar
        obj = object.__new__(cls)
        obj._elements = _frozen(arr)
        return obj

    @property
    def elements(self) -> np.ndarray:
        return self._elements

    @property
    def dim(self) -> int:
        return int(self._elements.size)

    @property
    def term_count(self) -> int:
        return 1

    def __len__(self) -> int:
        return self.dim

    def __array__(self, dtype=None, copy=None):
        return self._elements if dtype is None else self._elements.astype(dtype)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return np.array_equal(self._elements, other._elements)

    __hash__ = None  # type: ignore[assignment]

    def __neg__(self) -> "Hypervector":
        return Hypervector._wrap(-self._elements)

    def __repr__(self) -> str:
        head = " ".join("+" if e > 0 else "-" for e in self._elements[:16])
        more = " ..." if self.dim > 16 else ""
        return f"Hypervector(dim={self.dim}, [{head}{more}])"

    def as_sum(self) -> "SumVector":
        """View this vector as a one-term superposition."""
        return SumVector._wrap(self._elements.astype(np.int64), 1)


class SumVector:
    """Integer superposition of ``term_count`` bipolar terms."""

    __slots__ = ("_elements", "_term_count")

    def __init__(self, elements: Union[Sequence[int], np.ndarray], term_count: int):
        raw = np.asarray(elements).reshape(-1)
        if raw.size == 0:
            raise DimensionError("sum vector must have dim >= 1")
        arr = raw.astype(np.int64)
        if not np.array_equal(arr, raw):
            raise ValueError("sum vector elements must be integers")
        term_count = int(term_count)
        if term_count < 0:
            raise ValueError("term_count must be non-negative")
        if np.any(np.abs(arr) > term_count):
            raise ValueError("element magnitude exceeds term_count")
        if np.any((arr - term_count) % 2 != 0):
            raise ValueError("element parity does not match term_count parity")
        self._elements = _frozen(arr)
        self._term_count = term_count

    @classmethod
    def _wrap(cls, arr: np.ndarray, term_count: int) -> "SumVector":
        obj = object.__new__(cls)
        obj._elements = _frozen(arr)
        obj._term_count = int(term_count)
        return obj

    @property
    def elements(self) -> np.ndarray:
        return self._elements

    @property
    def dim(self) -> int:
        return int(self._elements.size)

    @property
    def term_count(self) -> int:
        return self._term_count

    def __len__(self) -> int:
        return self.dim

    def __array__(self, dtype=None, copy=None):
        return self._elements if dtype is None else self._elements.astype(dtype)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SumVector):
            return NotImplemented
        return self._term_count == other._term_count and np.array_equal(
            self._elements, other._elements
        )

    __hash__ = None  # type: ignore[assignment]

    def __neg__(self) -> "SumVector":
        return SumVector._wrap(-self._elements, self._term_count)

    def __repr__(self) -> str:
        head = " ".join(str(int(e)) for e in self._elements[:12])
        more = " ..." if self.dim > 12 else ""
        return f"SumVector(dim={self.dim}, terms={self._term_count}, [{head}{more}])"

    def as_sum(self) -> "SumVector":
        return self


VectorLike = Union[Hypervector, SumVector]


def _check_same_dim(*vs: VectorLike) -> int:
    dim = vs[0].dim
    for v in vs[1:]:
        if v.dim != dim:
            raise DimensionError(f"dimension mismatch: {dim} vs {v.dim}")
    return dim


# ---------------------------------------------------------------------------
# generation


def derive_seed(*parts: object) -> int:
    """Hash an arbitrary tuple of ints/strings into a 64-bit seed.

    Used wherever a sub-seed is needed (codebook entries, Monte-Carlo trials),
    so that seeds never depend on iteration order or process state.
    """
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if isinstance(p, (int, np.integer)) and not isinstance(p, bool):
            p = int(p)
        token = repr(p).encode("utf-8")
        h.update(struct.pack("<I", len(token)))
        h.update(token)
    return int.from_bytes(h.digest(), "little")


def _random_signs(dim: int, seed: int) -> np.ndarray:
    # raw PCG64 words are fixed by the algorithm, unlike Generator.integers,
    # so the stream is stable across numpy releases and platforms
    bitgen = np.random.PCG64(int(seed) & _MASK64)
    words = bitgen.random_raw((dim + 63) // 64).astype("<u8")
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:dim]
    return (bits.astype(np.int8) << 1) - 1


def random_hypervector(dim: int, seed: int) -> Hypervector:
    """I.i.d. uniform bipolar vector, bit-identical for a given ``(dim, seed)``."""
    if int(dim) < 1:
        raise DimensionError(f"dim must be >= 1, got {dim}")
    return Hypervector._wrap(_random_signs(int(dim), seed))


def identity(dim: int) -> Hypervector:
    """The all-ones vector, neutral element of :func:`bind`."""
    if int(dim) < 1:
        raise DimensionError(f"dim must be >= 1, got {dim}")
    return Hypervector._wrap(np.ones(int(dim), dtype=np.int8))


# ---------------------------------------------------------------------------
# algebra


def bind(x: VectorLike, y: VectorLike) -> VectorLike:
    """Element-wise product.

    Two hypervectors give a hypervector. Binding a sum vector by a hypervector
    flips signs element-wise and keeps the term count, which is how queries
    are unbound from superposed structures.
    """
    _check_same_dim(x, y)
    if isinstance(x, Hypervector) and isinstance(y, Hypervector):
        return Hypervector._wrap(x.elements * y.elements)
    if isinstance(x, SumVector) and isinstance(y, SumVector):
        raise TypeError("cannot bind two sum vectors")
    s, h = (x, y) if isinstance(x, SumVector) else (y, x)
    return SumVector._wrap(s.elements * h.elements, s.term_count)


def bind_all(vs: Iterable[VectorLike]) -> VectorLike:
    vs = list(vs)
    if not vs:
        raise ValueError("bind_all needs at least one vector")
    out = vs[0]
    for v in vs[1:]:
        out = bind(out, v)
    return out


def superpose(vs: Sequence[VectorLike]) -> SumVector:
    """Element-wise integer sum; term counts add up."""
    vs = list(vs)
    if not vs:
        raise ValueError("superpose needs at least one vector")
    _check_same_dim(*vs)
    total = np.zeros(vs[0].dim, dtype=np.int64)
    terms = 0
    for v in vs:
        total += v.elements
        terms += v.term_count
    return SumVector._wrap(total, terms)


def _sign(values: np.ndarray, previous: np.ndarray | None = None) -> np.ndarray:
    out = np.where(values > 0, 1, -1).astype(np.int8)
    zeros = values == 0
    if previous is None:
        out[zeros] = 1
    else:
        out[zeros] = np.where(previous[zeros] < 0, -1, 1)
    return out


def sign_threshold(v: VectorLike, previous: Hypervector | None = None) -> Hypervector:
    """Threshold to a hypervector.

    A zero element keeps the matching element of ``previous`` when given and
    becomes ``+1`` otherwise. Plain integer arrays are accepted too.
    """
    if isinstance(v, Hypervector):
        if previous is not None:
            _check_same_dim(v, previous)
        return v
    values = v.elements if isinstance(v, SumVector) else np.asarray(v).reshape(-1)
    if values.size == 0:
        raise DimensionError("cannot threshold an empty vector")
    if previous is not None and previous.dim != values.size:
        raise DimensionError(f"dimension mismatch: {values.size} vs {previous.dim}")
    prev = None if previous is None else previous.elements
    return Hypervector._wrap(_sign(values, prev))


def permute(x: VectorLike, k: int = 1) -> VectorLike:
    """Cyclic shift: ``out[i] = x[(i - k) mod N]``. Negative ``k`` inverts."""
    arr = np.roll(x.elements, int(k))
    if isinstance(x, Hypervector):
        return Hypervector._wrap(arr)
    return SumVector._wrap(arr, x.term_count)


def dot(x: VectorLike, y: VectorLike) -> int:
    _check_same_dim(x, y)
    return int(np.dot(x.elements.astype(np.int64), y.elements.astype(np.int64)))


def cosine(x: VectorLike, y: VectorLike) -> float:
    _check_same_dim(x, y)
    a = x.elements.astype(np.float64)
    b = y.elements.astype(np.float64)
    na2 = float(a @ a)
    nb2 = float(b @ b)
    if na2 == 0.0 or nb2 == 0.0:
        raise UndefinedSimilarityError("cosine of a zero-norm vector is undefined")
    # one square root of the product keeps +-1 exact for equal-norm inputs
    return float(a @ b) / math.sqrt(na2 * nb2)


# ---------------------------------------------------------------------------
# serialization


def to_json(v: VectorLike) -> dict:
    """JSON-ready dict. Sum vectors also carry ``term_count``."""
    out = {"dim": v.dim, "elements": [int(e) for e in v.elements]}
    if isinstance(v, SumVector):
        out["term_count"] = v.term_count
    return out


def from_json(obj: Union[dict, str]) -> VectorLike:
    if isinstance(obj, str):
        obj = json.loads(obj)
    elements = obj["elements"]
    if int(obj["dim"]) != len(elements):
        raise DimensionError(f"declared dim {obj['dim']} != {len(elements)} elements")
    if "term_count" in obj:
        return SumVector(elements, obj["term_count"])
    return Hypervector(elements)


def to_bytes(v: VectorLike) -> bytes:
    """Compact little-endian form: ``u32 dim`` then payload.

    Hypervectors are bit-packed MSB-first with ``+1 -> 1``; sum vectors are
    an ``i32`` array (term count is not stored).
    """
    header = struct.pack("<I", v.dim)
    if isinstance(v, Hypervector):
        return header + np.packbits(v.elements > 0, bitorder="big").tobytes()
    if np.any(np.abs(v.elements) > np.iinfo(np.int32).max):
        raise OverflowError("sum vector element does not fit in i32")
    return header + v.elements.astype("<i4").tobytes()


def _read_dim(data: bytes) -> int:
    if len(data) < 4:
        raise ValueError("truncated vector header")
    (dim,) = struct.unpack_from("<I", data)
    if dim < 1:
        raise DimensionError("encoded dim must be >= 1")
    return dim


def hypervector_from_bytes(data: bytes) -> Hypervector:
    dim = _read_dim(data)
    payload = np.frombuffer(data, dtype=np.uint8, offset=4)
    if payload.size != (dim + 7) // 8:
        raise ValueError("bit-packed payload has the wrong length")
    bits = np.unpackbits(payload, bitorder="big")[:dim]
    return Hypervector._wrap((bits.astype(np.int8) << 1) - 1)


def sumvector_from_bytes(data: bytes, term_count: int | None = None) -> SumVector:
    """Decode the ``i32`` form.

    Without ``term_count`` the smallest count consistent with the elements is
    used, which is ``max |element|``.
    """
    dim = _read_dim(data)
    payload = np.frombuffer(data, dtype="<i4", offset=4)
    if payload.size != dim:
        raise ValueError("i32 payload has the wrong length")
    arr = payload.astype(np.int64)
    if term_count is None:
        term_count = int(np.max(np.abs(arr)))
    return SumVector(arr, term_count)


def b64encode(v: Hypervector) -> str:
    return base64.b64encode(to_bytes(v)).decode("ascii")


def b64decode_hypervector(text: str) -> Hypervector:
    return hypervector_from_bytes(base64.b64decode(text.encode("ascii")))
